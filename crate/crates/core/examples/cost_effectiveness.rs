//! Guided top-10 selection against random selection.

use sdc_select::features::extract_suite;
use sdc_select::generator::{generate_tests, GeneratorConfig};
use sdc_select::ml::{Family, Hyperparams};
use sdc_select::oracle::{apply, label_test, SimulationConfig};
use sdc_select::selection::{evaluate_cost_effectiveness, format_per_mille};

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
    let report = evaluate_cost_effectiveness(&rows, &Family::ALL, &Hyperparams::default(), 10, 20, 0)?;
    println!("{:<20} {:>8} {:>8}", "model", "guided", "random");
    for r in &report.rows {
        println!(
            "{:<20} {:>8} {:>8}",
            r.family.name(),
            format_per_mille(r.guided),
            format_per_mille(r.baseline)
        );
    }
    Ok(())
}
