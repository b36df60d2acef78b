//! On-disk formats: one JSON file per test, the feature CSV, and JSON
//! artifacts. Every write goes to a temporary file that is then renamed
//! into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Stats};
use crate::road::{Label, Point3, RoadTest};

pub const CSV_HEADER: &str = "test_id,direct_distance,road_distance,num_l_turns,num_r_turns,num_straights,total_angle,median_angle,std_angle,max_angle,min_angle,mean_angle,median_pivot_off,std_pivot_off,max_pivot_off,min_pivot_off,mean_pivot_off,sim_time,safety";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestFile {
    test_id: String,
    control_points: Vec<[f64; 3]>,
    lane_width: f64,
    #[serde(default)]
    rf: Option<f64>,
    #[serde(default)]
    oob: Option<f64>,
    #[serde(default)]
    label: Option<Label>,
    #[serde(default)]
    sim_time: Option<f64>,
}

impl From<&RoadTest> for TestFile {
    fn from(t: &RoadTest) -> Self {
        TestFile {
            test_id: t.test_id.clone(),
            control_points: t.control_points.iter().map(|p| p.to_array()).collect(),
            lane_width: t.lane_width,
            rf: t.rf,
            oob: t.oob,
            label: (t.label != Label::Unlabeled).then_some(t.label),
            sim_time: t.sim_time,
        }
    }
}

/// Writes `bytes` to `path` via a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn test_to_json(test: &RoadTest) -> String {
    let mut s = serde_json::to_string_pretty(&TestFile::from(test)).expect("test files always serialise");
    s.push('\n');
    s
}

pub fn test_from_json(text: &str, origin: &str) -> Result<RoadTest> {
    let f: TestFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let test = RoadTest {
        test_id: f.test_id,
        control_points: f.control_points.into_iter().map(Point3::from).collect(),
        lane_width: f.lane_width,
        label: f.label.unwrap_or_default(),
        sim_time: f.sim_time,
        rf: f.rf,
        oob: f.oob,
    };
    test.check().map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    Ok(test)
}

pub fn read_test(path: &Path) -> Result<RoadTest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    test_from_json(&text, &path.display().to_string())
}

pub fn write_test(path: &Path, test: &RoadTest) -> Result<()> {
    write_atomic(path, test_to_json(test).as_bytes())
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn list_test_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Tests that parsed, and the files that did not.
#[derive(Debug, Default)]
pub struct LoadedTests {
    pub tests: Vec<(PathBuf, RoadTest)>,
    pub failures: Vec<(PathBuf, Error)>,
}

pub fn load_tests(dir: &Path) -> Result<LoadedTests> {
    let mut out = LoadedTests::default();
    for path in list_test_files(dir)? {
        match read_test(&path) {
            Ok(t) => out.tests.push((path, t)),
            Err(e) => out.failures.push((path, e)),
        }
    }
    Ok(out)
}

/// `printf("%.6g")` style: 6 significant digits, trailing zeros removed.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..6).contains(&exp) {
        strip(&format!("{:.*}", (5 - exp) as usize, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip(mantissa), sign, exp.abs())
    }
}

fn feature_record(fv: &FeatureVector) -> Vec<String> {
    let mut rec = vec![fv.test_id.clone()];
    rec.extend(fv.values().iter().map(|&v| format_number(v)));
    rec.push(fv.sim_time.map(format_number).unwrap_or_default());
    rec.push(fv.label.as_str().to_string());
    rec
}

/// Renders the feature CSV, rows ordered by test id.
pub fn features_to_csv(features: &[FeatureVector]) -> String {
    let mut sorted: Vec<&FeatureVector> = features.iter().collect();
    sorted.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for fv in sorted {
        w.write_record(feature_record(fv)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn write_features_csv(path: &Path, features: &[FeatureVector]) -> Result<()> {
    write_atomic(path, features_to_csv(features).as_bytes())
}

pub fn features_from_csv(text: &str, origin: &str) -> Result<Vec<FeatureVector>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        message: format!("line {line}: {message}"),
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?
        .map_err(|e| err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(err(1, "unexpected header".into()));
    }
    let mut out = Vec::new();
    for (n, rec) in records.enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| err(line, format!("bad number {:?} in column {}", &rec[i], i + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("non-finite value in column {}", i + 1)))
            }
        };
        let count = |i: usize| -> Result<usize> {
            let v = num(i)?;
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(err(line, format!("column {} must be a count", i + 1)))
            }
        };
        let stats = |at: usize| -> Result<Stats> {
            Ok(Stats {
                median: num(at)?,
                std: num(at + 1)?,
                max: num(at + 2)?,
                min: num(at + 3)?,
                mean: num(at + 4)?,
            })
        };
        let label = Label::parse(&rec[18]).ok_or_else(|| err(line, format!("bad safety {:?}", &rec[18])))?;
        let sim_time = if rec[17].is_empty() { None } else { Some(num(17)?) };
        out.push(FeatureVector {
            test_id: rec[0].to_string(),
            direct_distance: num(1)?,
            road_distance: num(2)?,
            num_l_turns: count(3)?,
            num_r_turns: count(4)?,
            num_straights: count(5)?,
            total_angle: num(6)?,
            angle: stats(7)?,
            pivot_off: stats(12)?,
            sim_time,
            label,
        });
    }
    Ok(out)
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureVector>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    features_from_csv(&text, &path.display().to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts always serialise");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(3.0), "3");
        assert_eq!(format_number(123.456789), "123.457");
        assert_eq!(format_number(-0.5), "-0.5");
        assert_eq!(format_number(1234567.0), "1.23457e+06");
        assert_eq!(format_number(999999.5), "1e+06");
        assert_eq!(format_number(0.0001), "0.0001");
        assert_eq!(format_number(0.00001234), "1.234e-05");
        assert_eq!(format_number(100000.0), "100000");
    }

    #[test]
    fn test_file_round_trip() {
        let mut t = RoadTest::new(
            "test_00001",
            vec![Point3::new(0.1, 0.2, 0.3), Point3::flat(10.0 / 3.0, 5.0)],
            4.0,
        )
        .unwrap();
        let back = test_from_json(&test_to_json(&t), "x").unwrap();
        assert_eq!(back, t);
        assert!(test_to_json(&t).contains("\"label\": null"));
        t.label = Label::Unsafe;
        t.sim_time = Some(12.25);
        t.rf = Some(1.5);
        t.oob = Some(0.5);
        assert_eq!(test_from_json(&test_to_json(&t), "x").unwrap(), t);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"test_id":"a","control_points":[[0,0,0],[1,0,0]],"lane_width":4,"speed":3}"#;
        assert!(matches!(test_from_json(text, "x"), Err(Error::Parse { .. })));
        let ok = r#"{"test_id":"a","control_points":[[0,0,0],[1,0,0]],"lane_width":4}"#;
        assert_eq!(test_from_json(ok, "x").unwrap().label, Label::Unlabeled);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let fv = FeatureVector {
            test_id: "b".into(),
            direct_distance: 10.5,
            road_distance: 12.0,
            num_l_turns: 1,
            num_r_turns: 0,
            num_straights: 2,
            total_angle: 90.0,
            angle: Stats::of(&[90.0]),
            pivot_off: Stats::of(&[20.0]),
            sim_time: None,
            label: Label::Unlabeled,
        };
        let mut other = fv.clone();
        other.test_id = "a".into();
        other.sim_time = Some(3.5);
        other.label = Label::Safe;
        let text = features_to_csv(&[fv.clone(), other.clone()]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert!(lines.next().unwrap().starts_with("a,"));
        assert!(lines.next().unwrap().ends_with(",,unlabeled"));
        assert_eq!(features_from_csv(&text, "x").unwrap(), vec![other, fv]);
        assert!(features_from_csv("nope\n", "x").is_err());
    }
}
