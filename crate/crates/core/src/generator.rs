//! Random road generation from piecewise-constant curvature profiles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::road::{self, Point3, RoadTest, DEFAULT_LANE_WIDTH};

/// Arc length between emitted control points.
pub const CONTROL_POINT_SPACING: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub count: usize,
    /// Side of the square map, metres.
    pub map_size: f64,
    pub seed: u64,
    pub segment_count_range: (usize, usize),
    /// Largest absolute curvature, 1/m.
    pub kappa_bound: f64,
    pub segment_length_range: (f64, f64),
    pub lane_width: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            count: 1,
            map_size: 500.0,
            seed: 0,
            segment_count_range: (4, 12),
            kappa_bound: 0.07,
            segment_length_range: (20.0, 80.0),
            lane_width: DEFAULT_LANE_WIDTH,
        }
    }
}

impl GeneratorConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        GeneratorConfig {
            count,
            seed,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let (smin, smax) = self.segment_count_range;
        let (lmin, lmax) = self.segment_length_range;
        if self.count < 1 {
            return bad("count must be at least 1".into());
        }
        if !(self.map_size > 0.0 && self.map_size.is_finite()) {
            return bad(format!("map size must be positive, got {}", self.map_size));
        }
        if smin < 1 || smin > smax {
            return bad(format!("invalid segment count range [{smin}, {smax}]"));
        }
        if !(lmin > 0.0 && lmin <= lmax && lmax.is_finite()) {
            return bad(format!("invalid segment length range [{lmin}, {lmax}]"));
        }
        if !(self.kappa_bound >= 0.0 && self.kappa_bound * lmin < PI) {
            return bad(format!(
                "kappa bound {} must be >= 0 and keep the shortest segment under a half turn",
                self.kappa_bound
            ));
        }
        if self.lane_width.is_nan() || self.lane_width <= 0.0 {
            return bad("lane width must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Pose {
    x: f64,
    y: f64,
    heading: f64,
}

impl Pose {
    fn advance(self, kappa: f64, ds: f64) -> Pose {
        if kappa.abs() < 1e-12 {
            Pose {
                x: self.x + ds * self.heading.cos(),
                y: self.y + ds * self.heading.sin(),
                ..self
            }
        } else {
            let heading = self.heading + kappa * ds;
            Pose {
                x: self.x + (heading.sin() - self.heading.sin()) / kappa,
                y: self.y - (heading.cos() - self.heading.cos()) / kappa,
                heading,
            }
        }
    }
}

/// Renders a curvature profile, `(curvature, length)` pairs, into control
/// points spaced [`CONTROL_POINT_SPACING`] apart, plus the end point.
pub fn render_profile(start: (f64, f64), heading: f64, profile: &[(f64, f64)]) -> Vec<Point3> {
    let mut starts = Vec::with_capacity(profile.len());
    let mut pose = Pose {
        x: start.0,
        y: start.1,
        heading,
    };
    let mut arc = 0.0;
    for &(kappa, len) in profile {
        starts.push((arc, pose));
        pose = pose.advance(kappa, len);
        arc += len;
    }
    let total = arc;
    let end = pose;

    let mut points = Vec::new();
    let mut seg = 0;
    let mut k = 0usize;
    loop {
        let s = k as f64 * CONTROL_POINT_SPACING;
        // keep the last interval at least half a spacing long
        if s > total - 0.5 * CONTROL_POINT_SPACING && k > 0 {
            break;
        }
        while seg + 1 < starts.len() && starts[seg + 1].0 <= s {
            seg += 1;
        }
        let (s0, p0) = starts[seg];
        let p = p0.advance(profile[seg].0, s - s0);
        points.push(Point3::flat(p.x, p.y));
        k += 1;
    }
    points.push(Point3::flat(end.x, end.y));
    points
}

fn candidate(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let (smin, smax) = cfg.segment_count_range;
    let (lmin, lmax) = cfg.segment_length_range;
    let segments = rng.gen_range(smin..=smax);
    let profile: Vec<(f64, f64)> = (0..segments)
        .map(|_| {
            let kappa = if cfg.kappa_bound > 0.0 {
                rng.gen_range(-cfg.kappa_bound..=cfg.kappa_bound)
            } else {
                0.0
            };
            let len = if lmax > lmin { rng.gen_range(lmin..=lmax) } else { lmin };
            (kappa, len)
        })
        .collect();
    let x = rng.gen_range(0.0..cfg.map_size);
    let y = rng.gen_range(0.0..cfg.map_size);
    let heading = rng.gen_range(0.0..2.0 * PI);
    render_profile((x, y), heading, &profile)
}

pub fn test_id(index: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(5);
    format!("test_{index:0width$}")
}

/// Generates `cfg.count` valid road tests.
///
/// Test `i` draws from its own ChaCha stream of `cfg.seed`, so the output
/// is identical however the work is scheduled.
pub fn generate_tests(cfg: &GeneratorConfig) -> Result<Vec<RoadTest>> {
    cfg.check()?;
    let budget = 1000 * cfg.count;
    (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            for _ in 0..budget {
                let points = candidate(cfg, &mut rng);
                let Ok(test) = RoadTest::new(test_id(i, cfg.count), points, cfg.lane_width) else {
                    continue;
                };
                if road::validate(&test, cfg.map_size).is_valid() {
                    return Ok(test);
                }
            }
            Err(Error::GenerationExhausted { attempts: budget })
        })
        .collect()
}
