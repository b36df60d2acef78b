//! Command-line behaviour and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

use sdc_select::cli::{self, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use sdc_select::features::FEATURE_NAMES;
use sdc_select::ml::TrainedModel;
use sdc_select::road::{Label, Point3, RoadTest};
use sdc_select::store;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(
        std::iter::once("sdc-select").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_straights(dir: &Path, n: usize) {
    fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let t = RoadTest::new(
            format!("test_{i:05}"),
            vec![
                Point3::flat(10.0, 10.0 + 5.0 * i as f64),
                Point3::flat(80.0 + 10.0 * i as f64, 20.0),
            ],
            4.0,
        )
        .unwrap();
        store::write_test(&dir.join(format!("test_{i:05}.json")), &t).unwrap();
    }
}

#[test]
fn generate_writes_count_files_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["generate-tests", "-c", "5", "--out", s(&a)]).code, EXIT_OK);
    assert_eq!(
        run(&["generate-tests", "-c", "5", "--seed", "0", "--out", s(&b)]).code,
        EXIT_OK
    );
    let files = store::list_test_files(&a).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, (0..5).map(|i| format!("test_{i:05}.json")).collect::<Vec<_>>());
    for f in &files {
        assert_eq!(fs::read(f).unwrap(), fs::read(b.join(f.file_name().unwrap())).unwrap());
        assert_eq!(store::read_test(f).unwrap().label, Label::Unlabeled);
    }
    let r = run(&["generate-tests", "-c", "0", "--out", s(&a)]);
    assert_eq!(r.code, EXIT_USAGE, "{}", r.err);
}

#[test]
fn label_tests_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("t");
    write_straights(&dir, 3);
    let r = run(&["label-tests", "-t", s(&dir), "--rf", "1.0", "--oob", "0.5"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.contains("0 unsafe, 3 safe"), "{}", r.out);
    for f in store::list_test_files(&dir).unwrap() {
        let t = store::read_test(&f).unwrap();
        assert_eq!((t.label, t.rf, t.oob), (Label::Safe, Some(1.0), Some(0.5)));
        assert!(t.sim_time.unwrap() > 0.0);
    }
    // relabeling warns and overwrites
    let r = run(&["label-tests", "-t", s(&dir), "--rf", "2.0", "--oob", "0.5"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.err.contains("relabeling"));
    assert_eq!(store::read_test(&dir.join("test_00000.json")).unwrap().rf, Some(2.0));

    fs::write(dir.join("zz_broken.json"), "{").unwrap();
    let r = run(&["label-tests", "-t", s(&dir), "--rf", "1.5", "--oob", "0.5"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(
        r.err.contains("zz_broken.json") && r.err.contains("1 file(s) failed"),
        "{}",
        r.err
    );

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(
        run(&["label-tests", "-t", s(&empty), "--rf", "1", "--oob", "0.5"]).code,
        EXIT_USAGE
    );
    assert_eq!(
        run(&["label-tests", "-t", s(&dir), "--rf", "0", "--oob", "0.5"]).code,
        EXIT_USAGE
    );
    assert_eq!(
        run(&["label-tests", "-t", s(&dir), "--rf", "1", "--oob", "1.5"]).code,
        EXIT_USAGE
    );

    let broken = tmp.path().join("broken");
    fs::create_dir(&broken).unwrap();
    fs::write(broken.join("a.json"), "[]").unwrap();
    assert_eq!(
        run(&["label-tests", "-t", s(&broken), "--rf", "1", "--oob", "0.5"]).code,
        EXIT_DATA
    );
}

#[test]
fn extract_features_writes_golden_header() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("t");
    write_straights(&dir, 3);
    assert_eq!(
        run(&["label-tests", "-t", s(&dir), "--rf", "1.5", "--oob", "0.5"]).code,
        EXIT_OK
    );
    let csv = tmp.path().join("f.csv");
    let r = run(&["extract-features", "-t", s(&dir), "--csv", s(&csv)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let text = fs::read_to_string(&csv).unwrap();
    let golden =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/features_header.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), golden.trim_end());
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",safe")));

    let again = tmp.path().join("g.csv");
    run(&["extract-features", "-t", s(&dir), "--csv", s(&again)]);
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&again).unwrap());

    fs::write(dir.join("test_00001.json"), "not json").unwrap();
    let r = run(&["extract-features", "-t", s(&dir), "--csv", s(&csv)]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.err.contains("1 file(s) failed"));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn unlabeled_rows_have_empty_sim_time() {
    let tmp = tempfile::tempdir().unwrap();
    write_straights(tmp.path(), 2);
    let csv = tmp.path().join("f.csv");
    assert_eq!(
        run(&["extract-features", "-t", s(tmp.path()), "--csv", s(&csv)]).code,
        EXIT_OK
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",,unlabeled")));
}

/// Feature CSV whose label is a threshold on road_distance.
fn learnable_csv(path: &Path, one_class: bool) {
    let mut text = store::CSV_HEADER.to_string();
    text.push('\n');
    for i in 0..60 {
        let road = 100.0 + 7.0 * i as f64;
        let safety = if !one_class && road > 300.0 { "unsafe" } else { "safe" };
        let turns = i % 4;
        text.push_str(&format!(
            "t{i:03},{},{road},{turns},1,2,{},40,5,50,30,40,25,3,30,20,25,{},{safety}\n",
            road * 0.6,
            90 + i,
            road / 20.0
        ));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn evaluate_models_reports_and_saves_best() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("road_features.csv");
    learnable_csv(&csv, false);
    let r = run(&["evaluate-models", "--csv", s(&csv), "--k", "5", "--seed", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let best_line = r.out.lines().find(|l| l.ends_with('*')).unwrap();
    assert!(best_line.contains("1.000"), "{}", r.out);
    let _model: TrainedModel = store::read_json(&tmp.path().join(cli::MODEL_FILE)).unwrap();
    let report = fs::read_to_string(tmp.path().join(cli::REPORT_FILE)).unwrap();
    assert!(report.contains("\"ranking\""));

    let single = tmp.path().join("one.csv");
    learnable_csv(&single, true);
    let r = run(&["evaluate-models", "--csv", s(&single)]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.err.contains("degenerate"), "{}", r.err);
    assert_ne!(
        run(&["evaluate-models", "--csv", s(&tmp.path().join("missing.csv"))]).code,
        EXIT_OK
    );
}

#[test]
fn predict_tests_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("t");
    write_straights(&dir, 3);
    let model = tmp.path().join("m.json");
    store::write_json(
        &model,
        &TrainedModel::constant_unsafe(FEATURE_NAMES.iter().map(|s| s.to_string()).collect()),
    )
    .unwrap();
    let r = run(&["predict-tests", "-t", s(&dir), "--model", s(&model)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let preds = fs::read_to_string(tmp.path().join(cli::PREDICTIONS_FILE)).unwrap();
    assert_eq!(preds.lines().count(), 4);
    assert!(preds.lines().skip(1).all(|l| l.ends_with(",1,unsafe")), "{preds}");

    store::write_json(&model, &TrainedModel::constant_unsafe(vec!["x".into()])).unwrap();
    assert_eq!(
        run(&["predict-tests", "-t", s(&dir), "--model", s(&model)]).code,
        EXIT_DATA
    );
    let empty = tmp.path().join("e");
    fs::create_dir(&empty).unwrap();
    assert_eq!(
        run(&["predict-tests", "-t", s(&empty), "--model", s(&model)]).code,
        EXIT_USAGE
    );
}

#[test]
fn cost_effectiveness_table() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("road_features.csv");
    learnable_csv(&csv, false);
    let r = run(&[
        "evaluate-cost-effectiveness",
        "--csv",
        s(&csv),
        "--top",
        "30",
        "--reps",
        "3",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.err.contains("exceeds the held-out pool"));
    assert_eq!(r.out.lines().filter(|l| l.contains('‰')).count(), 6, "{}", r.out);

    let text = fs::read_to_string(&csv).unwrap().replacen(",5,safe", ",,safe", 1);
    fs::write(&csv, text).unwrap();
    let r = run(&["evaluate-cost-effectiveness", "--csv", s(&csv)]);
    assert_eq!(r.code, EXIT_DATA, "{}", r.err);
    assert!(r.err.contains("sim_time"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sdc-select");
    assert_eq!(
        Command::new(bin).arg("--help").output().unwrap().status.code(),
        Some(EXIT_OK)
    );
    assert_eq!(
        Command::new(bin).arg("fly").output().unwrap().status.code(),
        Some(EXIT_USAGE)
    );
    assert_eq!(
        Command::new(bin)
            .args(["generate-tests"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(EXIT_USAGE)
    );
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .args(["generate-tests", "-c", "2", "--out", s(tmp.path())])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(store::list_test_files(tmp.path()).unwrap().len(), 2);
}
