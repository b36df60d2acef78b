//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data
//! error, 3 internal error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::features::{self, FeatureVector};
use crate::generator::{self, GeneratorConfig};
use crate::ml::{
    self, gini_importance, Dataset, EvaluationReport, Family, Hyperparams, ImportanceReport, TrainedModel,
};
use crate::oracle::{self, SimulationConfig};
use crate::road::Label;
use crate::selection::{self, format_per_mille};
use crate::store;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

pub const REPORT_FILE: &str = "evaluation_report.json";
pub const MODEL_FILE: &str = "best_model.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const CE_REPORT_FILE: &str = "cost_effectiveness_report.json";

#[derive(Debug, Parser)]
#[command(
    name = "sdc-select",
    version,
    about = "Select cost-effective lane-keeping road tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random valid road tests, one JSON file each.
    GenerateTests {
        #[arg(short = 'c', value_name = "N")]
        count: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR", default_value = "tests")]
        out: PathBuf,
    },
    /// Run the driving oracle and record label and simulation time.
    LabelTests {
        #[arg(short = 't', value_name = "DIR")]
        tests: PathBuf,
        #[arg(long)]
        rf: f64,
        #[arg(long)]
        oob: f64,
    },
    /// Write the road feature CSV of a test directory.
    ExtractFeatures {
        #[arg(short = 't', value_name = "DIR")]
        tests: PathBuf,
        #[arg(long, value_name = "PATH", default_value = "road_features.csv")]
        csv: PathBuf,
    },
    /// Cross-validate all classifier families and keep the best model.
    EvaluateModels {
        #[arg(long, value_name = "PATH")]
        csv: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Predict the outcome of unexecuted tests with a saved model.
    PredictTests {
        #[arg(short = 't', value_name = "DIR")]
        tests: PathBuf,
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
    },
    /// Compare model-guided and random selection by unsafe tests per second.
    EvaluateCostEffectiveness {
        #[arg(long, value_name = "PATH")]
        csv: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Lib(Error::GenerationExhausted { .. }) => EXIT_INTERNAL,
            CliError::Lib(_) => EXIT_DATA,
        }
    }
}

type CliResult = std::result::Result<i32, CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::GenerateTests { count, seed, out: dir } => generate_tests(count, seed, &dir, out),
        Command::LabelTests { tests, rf, oob } => label_tests(&tests, rf, oob, out, err),
        Command::ExtractFeatures { tests, csv } => extract_features(&tests, &csv, out, err),
        Command::EvaluateModels { csv, k, seed } => evaluate_models(&csv, k, seed, out),
        Command::PredictTests { tests, model } => predict_tests(&tests, &model, out, err),
        Command::EvaluateCostEffectiveness { csv, top, reps, seed } => {
            evaluate_cost_effectiveness(&csv, top, reps, seed, out, err)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| {
        CliError::Lib(Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

/// Parseable tests of a directory; an empty directory is a usage error.
fn load_dir(dir: &Path, err: &mut dyn Write) -> std::result::Result<store::LoadedTests, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", dir.display())));
    }
    let loaded = store::load_tests(dir)?;
    if loaded.tests.is_empty() && loaded.failures.is_empty() {
        return Err(CliError::Usage(format!("{} contains no test files", dir.display())));
    }
    for (path, e) in &loaded.failures {
        let _ = writeln!(err, "warning: skipping {}: {e}", path.display());
    }
    Ok(loaded)
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.join(name),
        _ => PathBuf::from(name),
    }
}

fn generate_tests(count: i64, seed: u64, dir: &Path, out: &mut dyn Write) -> CliResult {
    if count < 1 {
        return Err(CliError::Usage(format!("-c must be at least 1, got {count}")));
    }
    let cfg = GeneratorConfig::new(count as usize, seed);
    let tests = generator::generate_tests(&cfg)?;
    fs::create_dir_all(dir).map_err(io(dir))?;
    for t in &tests {
        store::write_test(&dir.join(format!("{}.json", t.test_id)), t)?;
    }
    let _ = writeln!(out, "wrote {} tests to {}", tests.len(), dir.display());
    Ok(EXIT_OK)
}

fn label_tests(dir: &Path, rf: f64, oob: f64, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    if !(rf > 0.0 && rf.is_finite()) {
        return Err(CliError::Usage(format!("--rf must be positive, got {rf}")));
    }
    let cfg = SimulationConfig {
        rf,
        oob,
        ..Default::default()
    };
    cfg.check().map_err(|e| CliError::Usage(e.to_string()))?;
    let loaded = load_dir(dir, err)?;
    let mut failed = loaded.failures.len();
    let (mut safe, mut unsafe_) = (0, 0);
    for (path, mut test) in loaded.tests {
        if test.label != Label::Unlabeled {
            let _ = writeln!(err, "warning: relabeling {} (was {})", test.test_id, test.label);
        }
        let result = oracle::label_test(&test, &cfg).and_then(|r| {
            oracle::apply(&mut test, &r, &cfg);
            store::write_test(&path, &test).map(|_| r.label)
        });
        match result {
            Ok(Label::Unsafe) => unsafe_ += 1,
            Ok(_) => safe += 1,
            Err(e) => {
                failed += 1;
                let _ = writeln!(err, "warning: could not label {}: {e}", path.display());
            }
        }
    }
    let _ = writeln!(out, "labeled {} tests: {unsafe_} unsafe, {safe} safe", safe + unsafe_);
    if failed > 0 {
        let _ = writeln!(err, "{failed} file(s) failed");
    }
    Ok(if safe + unsafe_ == 0 { EXIT_DATA } else { EXIT_OK })
}

fn extract_features(dir: &Path, csv: &Path, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let loaded = load_dir(dir, err)?;
    let mut failed = loaded.failures.len();
    let tests: Vec<_> = loaded.tests.into_iter().map(|(_, t)| t).collect();
    let mut rows = Vec::with_capacity(tests.len());
    for (t, r) in tests.iter().zip(features::extract_suite(&tests)) {
        match r {
            Ok(fv) => rows.push(fv),
            Err(e) => {
                failed += 1;
                let _ = writeln!(err, "warning: no features for {}: {e}", t.test_id);
            }
        }
    }
    if rows.is_empty() {
        let _ = writeln!(err, "{failed} file(s) failed, nothing written");
        return Ok(EXIT_DATA);
    }
    store::write_features_csv(csv, &rows)?;
    let _ = writeln!(out, "wrote {} rows to {}", rows.len(), csv.display());
    if failed > 0 {
        let _ = writeln!(err, "{failed} file(s) failed");
    }
    Ok(EXIT_OK)
}

fn labelled_rows(csv: &Path) -> std::result::Result<Vec<FeatureVector>, CliError> {
    let rows = store::read_features_csv(csv)?;
    if rows.is_empty() {
        return Err(Error::InvalidData(format!("{} has no rows", csv.display())).into());
    }
    Ok(rows)
}

#[derive(Serialize)]
struct ModelsReport<'a> {
    #[serde(flatten)]
    evaluation: &'a EvaluationReport,
    best: Family,
    importance: Option<ImportanceReport>,
}

fn evaluate_models(csv: &Path, k: usize, seed: u64, out: &mut dyn Write) -> CliResult {
    let rows = labelled_rows(csv)?;
    let dataset = Dataset::from_features(&rows)?;
    let hp = Hyperparams::default();
    let report = ml::benchmark_all(&dataset, &hp, k, seed)?;
    let best = report.best();
    let model = ml::train(best, &dataset, &hp, seed)?;
    let importance = gini_importance(&model).ok();

    let _ = writeln!(
        out,
        "{}-fold cross-validation on {} tests ({} unsafe)",
        k, report.rows, report.unsafe_rows
    );
    let _ = writeln!(out, "{:<22}{:>10}{:>10}{:>10}", "model", "precision", "recall", "f1");
    for r in &report.ranking {
        let m = &r.aggregate;
        let mark = if r.family == best { "  *" } else { "" };
        let _ = writeln!(
            out,
            "{:<22}{:>10.3}{:>10.3}{:>10.3}{mark}",
            r.family.name(),
            m.precision,
            m.recall,
            m.f1
        );
    }
    if let Some(imp) = &importance {
        let _ = writeln!(out, "most important features of {best}:");
        for (name, v) in imp.ranked().into_iter().take(5) {
            let _ = writeln!(out, "  {name:<20}{v:.3}");
        }
    }
    let report_path = sibling(csv, REPORT_FILE);
    let model_path = sibling(csv, MODEL_FILE);
    store::write_json(
        &report_path,
        &ModelsReport {
            evaluation: &report,
            best,
            importance,
        },
    )?;
    store::write_json(&model_path, &model)?;
    let _ = writeln!(
        out,
        "report: {}\nmodel: {}",
        report_path.display(),
        model_path.display()
    );
    Ok(EXIT_OK)
}

fn predict_tests(dir: &Path, model_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let model: TrainedModel = store::read_json(model_path)?;
    let loaded = load_dir(dir, err)?;
    let tests: Vec<_> = loaded.tests.into_iter().map(|(_, t)| t).collect();
    let mut rows = Vec::new();
    for (t, r) in tests.iter().zip(features::extract_suite(&tests)) {
        match r {
            Ok(fv) => rows.push(fv),
            Err(e) => {
                let _ = writeln!(err, "warning: no features for {}: {e}", t.test_id);
            }
        }
    }
    let predictions = selection::predict_tests(&model, &rows)?;
    let mut text = String::from("test_id,score,prediction\n");
    for p in &predictions {
        let _ = writeln!(out, "{:<16}{:>8.4}  {}", p.test_id, p.score, p.label);
        text.push_str(&format!(
            "{},{},{}\n",
            p.test_id,
            store::format_number(p.score),
            p.label
        ));
    }
    let path = sibling(model_path, PREDICTIONS_FILE);
    store::write_atomic(&path, text.as_bytes())?;
    let n_unsafe = predictions.iter().filter(|p| p.label == Label::Unsafe).count();
    let _ = writeln!(
        out,
        "{} of {} tests predicted unsafe; written to {}",
        n_unsafe,
        predictions.len(),
        path.display()
    );
    Ok(if predictions.is_empty() { EXIT_DATA } else { EXIT_OK })
}

fn evaluate_cost_effectiveness(
    csv: &Path,
    top: usize,
    reps: usize,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    if top == 0 || reps == 0 {
        return Err(CliError::Usage("--top and --reps must be at least 1".into()));
    }
    let rows = labelled_rows(csv)?;
    let report = selection::evaluate_cost_effectiveness(&rows, &Family::ALL, &Hyperparams::default(), top, reps, seed)?;
    if top > report.held_out {
        let _ = writeln!(
            err,
            "warning: --top {top} exceeds the held-out pool of {}; selecting all of it",
            report.held_out
        );
    }
    let _ = writeln!(
        out,
        "top {} of {} held-out tests, mean of {} repetitions",
        top.min(report.held_out),
        report.held_out,
        reps
    );
    let _ = writeln!(out, "{:<22}{:>10}{:>10}", "model", "guided", "random");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<22}{:>10}{:>10}",
            r.family.name(),
            format_per_mille(r.guided),
            format_per_mille(r.baseline)
        );
    }
    let path = sibling(csv, CE_REPORT_FILE);
    store::write_json(&path, &report)?;
    let _ = writeln!(out, "report: {}", path.display());
    Ok(EXIT_OK)
}
