//! Mean decrease in Gini of a random forest trained on oracle labels.

use sdc_select::features::extract_suite;
use sdc_select::generator::{generate_tests, GeneratorConfig};
use sdc_select::ml::{gini_importance, train, Dataset, Family, Hyperparams};
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
    let model = train(
        Family::RandomForest,
        &Dataset::from_features(&rows)?,
        &Hyperparams::default(),
        0,
    )?;
    for (name, v) in gini_importance(&model)?.ranked() {
        println!("{name:<20} {v:.4}");
    }
    Ok(())
}
