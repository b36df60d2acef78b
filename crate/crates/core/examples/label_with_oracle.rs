//! Labels one generated suite at three risk factors.

use sdc_select::generator::{generate_tests, GeneratorConfig};
use sdc_select::oracle::{label_suite, SimulationConfig};
use sdc_select::road::Label;

fn main() -> sdc_select::Result<()> {
    let tests = generate_tests(&GeneratorConfig::new(200, 0))?;
    for rf in [1.0, 1.5, 2.0] {
        let results = label_suite(&tests, &SimulationConfig::with_rf(rf))
            .into_iter()
            .collect::<sdc_select::Result<Vec<_>>>()?;
        let n_unsafe = results.iter().filter(|r| r.label == Label::Unsafe).count();
        let time: f64 = results.iter().map(|r| r.sim_time).sum();
        println!("rf {rf}: {n_unsafe} of {} unsafe, {time:.0} s simulated", tests.len());
    }
    Ok(())
}
