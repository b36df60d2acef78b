//! Prints the feature CSV of a small labelled suite.

use sdc_select::features::extract_suite;
use sdc_select::generator::{generate_tests, GeneratorConfig};
use sdc_select::oracle::{apply, label_test, SimulationConfig};
use sdc_select::store::features_to_csv;

fn main() -> sdc_select::Result<()> {
    let cfg = SimulationConfig::default();
    let mut tests = generate_tests(&GeneratorConfig::new(8, 3))?;
    for t in &mut tests {
        let r = label_test(t, &cfg)?;
        apply(t, &r, &cfg);
    }
    let rows = extract_suite(&tests)
        .into_iter()
        .collect::<sdc_select::Result<Vec<_>>>()?;
    print!("{}", features_to_csv(&rows));
    Ok(())
}
