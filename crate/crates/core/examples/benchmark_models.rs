//! Ten-fold cross-validation of all six classifier families.

use sdc_select::features::extract_suite;
use sdc_select::generator::{generate_tests, GeneratorConfig};
use sdc_select::ml::{benchmark_all, Dataset, Hyperparams};
use sdc_select::oracle::{apply, label_test, SimulationConfig};

fn main() -> sdc_select::Result<()> {
    let cfg = SimulationConfig::with_rf(1.5);
    let mut tests = generate_tests(&GeneratorConfig::new(500, 0))?;
    for t in &mut tests {
        let r = label_test(t, &cfg)?;
        apply(t, &r, &cfg);
    }
    let rows = extract_suite(&tests)
        .into_iter()
        .collect::<sdc_select::Result<Vec<_>>>()?;
    let data = Dataset::from_features(&rows)?;
    let report = benchmark_all(&data, &Hyperparams::default(), 10, 0)?;
    println!("{} tests, {} unsafe", report.rows, report.unsafe_rows);
    for r in &report.ranking {
        let m = &r.aggregate;
        println!(
            "{:<20} P {:.3}  R {:.3}  F1 {:.3}",
            r.family.name(),
            m.precision,
            m.recall,
            m.f1
        );
    }
    Ok(())
}
