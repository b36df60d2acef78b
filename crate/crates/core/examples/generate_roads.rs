//! Generates a few roads and prints their segment structure.

use sdc_select::generator::{generate_tests, GeneratorConfig};
use sdc_select::road::segment_road;

fn main() -> sdc_select::Result<()> {
    for test in generate_tests(&GeneratorConfig::new(5, 42))? {
        let road = segment_road(&test)?;
        println!(
            "{}: {} control points, {:.1} m, {} segments",
            test.test_id,
            test.control_points.len(),
            road.length(),
            road.segments.len()
        );
        for s in &road.segments {
            match s.pivot_radius {
                Some(r) => println!(
                    "  {:?} {:.1} m, {:.1} deg, radius {:.1} m",
                    s.kind, s.length, s.turn_angle, r
                ),
                None => println!("  {:?} {:.1} m", s.kind, s.length),
            }
        }
    }
    Ok(())
}
