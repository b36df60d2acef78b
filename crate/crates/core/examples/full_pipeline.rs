//! Runs every CLI command in a temporary directory.

use std::io;

use sdc_select::cli::run;

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let tests = dir.path().join("tests");
    let csv = dir.path().join("road_features.csv");
    let model = dir.path().join("best_model.json");
    let (t, c, m) = (tests.to_str().unwrap(), csv.to_str().unwrap(), model.to_str().unwrap());
    let steps: [&[&str]; 6] = [
        &["generate-tests", "-c", "300", "--out", t],
        &["label-tests", "-t", t, "--rf", "1.5", "--oob", "0.5"],
        &["extract-features", "-t", t, "--csv", c],
        &["evaluate-models", "--csv", c],
        &["predict-tests", "-t", t, "--model", m],
        &["evaluate-cost-effectiveness", "--csv", c, "--reps", "5"],
    ];
    for args in steps {
        println!("$ sdc-select {}", args.join(" "));
        let code = run(
            std::iter::once("sdc-select").chain(args.iter().copied()),
            &mut io::sink(),
            &mut io::stderr(),
        );
        if code != 0 {
            eprintln!("exit code {code}");
            std::process::exit(code);
        }
    }
    println!("pipeline finished");
}
