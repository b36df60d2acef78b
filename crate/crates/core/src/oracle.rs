//! Deterministic lane-keeping driver used to execute and label tests.
//!
//! The driver follows the centre of the right lane with a lookahead of
//! `lookahead_base * rf` metres. Steering at a point that far ahead makes it
//! cut corners: at every path point the inward deviation is the largest
//! distance between the point and a chord of at most one lookahead centred
//! on it. Two further inward terms model the controller: a tracking error
//! proportional to curvature and a drift proportional to the lateral
//! acceleration the driver accepts, `min(v_max^2 |k|, a_lat * rf)`.
//! Every term is non-decreasing in `rf`, and the total is capped so that
//! the whole footprint never leaves the lane.
//!
//! The out-of-lane fraction is the share of a 5 x 11 grid over the
//! vehicle rectangle lying outside the lane, evaluated at every path point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::road::{self, Label, Point3, RoadTest, Validity};

pub const VEHICLE_WIDTH: f64 = 1.8;
pub const VEHICLE_LENGTH: f64 = 4.2;
const GRID_LATERAL: usize = 5;
const GRID_LONGITUDINAL: usize = 11;
/// Inward tracking error per unit of curvature, m^2.
const TRACKING_GAIN: f64 = 21.0;
/// Inward drift per unit of accepted lateral acceleration, m per (m/s^2).
const DRIFT_GAIN: f64 = 0.02;
const PATH_STEP: f64 = 1.0;
const STRAIGHT_CURVATURE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationConfig {
    /// Risk factor: 1.0 cautious, 1.5 moderate, 2.0 reckless.
    pub rf: f64,
    /// Out-of-lane footprint fraction at which a test fails.
    pub oob: f64,
    /// m/s
    pub speed_limit: f64,
    /// m/s^2, lateral acceleration accepted at rf = 1.
    pub base_lat_accel: f64,
    /// s
    pub timestep: f64,
    /// m, lookahead at rf = 1.
    pub lookahead_base: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            rf: 1.5,
            oob: 0.5,
            speed_limit: 22.0,
            base_lat_accel: 3.5,
            timestep: 0.05,
            lookahead_base: 5.0,
        }
    }
}

impl SimulationConfig {
    pub fn with_rf(rf: f64) -> Self {
        SimulationConfig {
            rf,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.rf) {
            return Err(Error::InvalidConfig(format!(
                "risk factor must be > 0, got {}",
                self.rf
            )));
        }
        if !(self.oob > 0.0 && self.oob <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "oob must lie in (0, 1], got {}",
                self.oob
            )));
        }
        if !positive(self.timestep) || !positive(self.speed_limit) {
            return Err(Error::InvalidConfig("timestep and speed limit must be > 0".into()));
        }
        if !positive(self.base_lat_accel) || !positive(self.lookahead_base) {
            return Err(Error::InvalidConfig(
                "lateral acceleration and lookahead must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn lookahead(&self) -> f64 {
        self.lookahead_base * self.rf
    }

    /// Speed the driver commands on curvature `kappa`.
    pub fn commanded_speed(&self, kappa: f64) -> f64 {
        let kappa = kappa.abs();
        if kappa == 0.0 {
            return self.speed_limit;
        }
        self.speed_limit.min((self.base_lat_accel * self.rf / kappa).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationResult {
    pub label: Label,
    /// Simulated driving time, seconds.
    pub sim_time: f64,
    pub max_oob_fraction: f64,
    /// Arc position (m) where the out-of-lane fraction first reached the threshold.
    pub first_violation_arc_pos: Option<f64>,
}

/// Centre line of the right-hand lane.
fn lane_center(spine: &[Point3], lane_width: f64) -> Vec<Point3> {
    let n = spine.len();
    let headings = road::edge_headings(spine);
    (0..n)
        .map(|i| {
            let (hx, hy) = match i {
                0 => (headings[0].cos(), headings[0].sin()),
                _ if i == n - 1 => (headings[n - 2].cos(), headings[n - 2].sin()),
                _ => {
                    let (a, b) = (headings[i - 1], headings[i]);
                    (a.cos() + b.cos(), a.sin() + b.sin())
                }
            };
            let norm = hx.hypot(hy).max(f64::MIN_POSITIVE);
            // left normal is (-hy, hx); the lane lies to the right
            let offset = 0.5 * lane_width / norm;
            let p = spine[i];
            Point3::new(p.x + hy * offset, p.y - hx * offset, p.z)
        })
        .collect()
}

fn distance_to_chord(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.x - (a.x + t * vx)).hypot(p.y - (a.y + t * vy))
}

/// Corner-cutting deviation at every point: the largest distance to a chord
/// centred on the point and at most one lookahead long.
fn cut_deviation(path: &[Point3], spacing: f64, lookahead: f64) -> Vec<f64> {
    let n = path.len();
    let reach = (0.5 * lookahead / spacing + 1e-9).floor() as usize;
    (0..n)
        .map(|i| {
            (1..=reach)
                .map(|k| {
                    let a = &path[i.saturating_sub(k)];
                    let b = &path[(i + k).min(n - 1)];
                    distance_to_chord(&path[i], a, b)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Share of the footprint grid outside a lane of `lane_width`, for a car
/// displaced `deviation` metres towards the inside of a bend of curvature
/// `kappa` (or sideways on a straight).
pub(crate) fn footprint_outside(deviation: f64, kappa: f64, lane_width: f64) -> f64 {
    let half_lane = 0.5 * lane_width;
    let mut outside = 0usize;
    for li in 0..GRID_LATERAL {
        let y = VEHICLE_WIDTH * (li as f64 / (GRID_LATERAL - 1) as f64 - 0.5);
        for lj in 0..GRID_LONGITUDINAL {
            let x = VEHICLE_LENGTH * (lj as f64 / (GRID_LONGITUDINAL - 1) as f64 - 0.5);
            let offset = if kappa.abs() < STRAIGHT_CURVATURE {
                deviation + y
            } else {
                let radius = 1.0 / kappa.abs();
                let across = radius - deviation - y;
                if across <= 0.0 {
                    f64::INFINITY
                } else {
                    radius - across.hypot(x)
                }
            };
            if offset.abs() > half_lane {
                outside += 1;
            }
        }
    }
    outside as f64 / (GRID_LATERAL * GRID_LONGITUDINAL) as f64
}

/// Largest deviation the driver model produces; beyond this the whole
/// footprint would leave the lane.
pub fn max_deviation(lane_width: f64) -> f64 {
    0.5 * lane_width + 0.25 * VEHICLE_WIDTH
}

/// Drives one test and labels it against `cfg.oob`.
pub fn label_test(test: &RoadTest, cfg: &SimulationConfig) -> Result<SimulationResult> {
    cfg.check()?;
    if let Validity::Invalid(v) = road::validate(test, f64::INFINITY) {
        return Err(Error::InvalidRoad(format!("{}: {}", test.test_id, v)));
    }
    let spine = road::interpolate(test, PATH_STEP)?;
    let path = lane_center(&spine, test.lane_width);
    let n = path.len();
    let spacing = road::path_length(&spine) / (n - 1) as f64;
    let kappa = road::point_curvatures(&path);
    let lookahead = cfg.lookahead();
    let cap = max_deviation(test.lane_width);

    let cut = cut_deviation(&path, spacing, lookahead);
    let mut max_oob: f64 = 0.0;
    let mut first_violation = None;
    let mut arc = 0.0;
    for i in 0..n {
        if i > 0 {
            arc += path[i - 1].distance(&path[i]);
        }
        let accepted = (cfg.speed_limit.powi(2) * kappa[i].abs()).min(cfg.base_lat_accel * cfg.rf);
        let drift = TRACKING_GAIN * kappa[i].abs() + DRIFT_GAIN * accepted;
        let deviation = (cut[i] + drift).min(cap);
        let fraction = footprint_outside(deviation, kappa[i], test.lane_width);
        max_oob = max_oob.max(fraction);
        if first_violation.is_none() && fraction >= cfg.oob {
            first_violation = Some(arc);
        }
    }

    // Speed at each point anticipates the sharpest curvature within one lookahead.
    let reach = (lookahead / spacing).ceil() as usize;
    let speed: Vec<f64> = (0..n)
        .map(|i| {
            let sharpest = kappa[i..(i + reach + 1).min(n)]
                .iter()
                .fold(0.0f64, |m, k| m.max(k.abs()));
            cfg.commanded_speed(sharpest)
        })
        .collect();
    let total: f64 = road::path_length(&path);
    let mut s = 0.0;
    let mut time = 0.0;
    while s < total {
        let idx = ((s / spacing) as usize).min(n - 1);
        let v = speed[idx];
        let ds = v * cfg.timestep;
        if s + ds >= total {
            time += (total - s) / v;
            break;
        }
        s += ds;
        time += cfg.timestep;
    }

    Ok(SimulationResult {
        label: if max_oob >= cfg.oob { Label::Unsafe } else { Label::Safe },
        sim_time: time,
        max_oob_fraction: max_oob,
        first_violation_arc_pos: first_violation,
    })
}

/// Labels every test; per-test failures are returned in place.
pub fn label_suite(tests: &[RoadTest], cfg: &SimulationConfig) -> Vec<Result<SimulationResult>> {
    tests.par_iter().map(|t| label_test(t, cfg)).collect()
}

/// Records a simulation outcome on the test.
pub fn apply(test: &mut RoadTest, result: &SimulationResult, cfg: &SimulationConfig) {
    test.label = result.label;
    test.sim_time = Some(result.sim_time);
    test.rf = Some(cfg.rf);
    test.oob = Some(cfg.oob);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(id: &str, len: f64) -> RoadTest {
        RoadTest::new(id, vec![Point3::flat(10.0, 10.0), Point3::flat(10.0 + len, 10.0)], 4.0).unwrap()
    }

    #[test]
    fn straight_road_is_safe_at_full_speed() {
        for rf in [1.0, 1.5, 2.0] {
            let r = label_test(&straight("s", 200.0), &SimulationConfig::with_rf(rf)).unwrap();
            assert_eq!(r.label, Label::Safe);
            assert_eq!(r.max_oob_fraction, 0.0);
            assert!((r.sim_time - 200.0 / 22.0).abs() < 1e-9, "{}", r.sim_time);
            assert_eq!(r.first_violation_arc_pos, None);
        }
    }

    #[test]
    fn footprint_fraction_basics() {
        assert_eq!(footprint_outside(0.0, 0.0, 4.0), 0.0);
        // centre row exactly on the boundary stays inside; beyond it three rows leave
        assert!((footprint_outside(2.2, 0.0, 4.0) - 0.6).abs() < 1e-12);
        assert!(footprint_outside(max_deviation(4.0), 0.05, 4.0) < 1.0);
        assert!(footprint_outside(max_deviation(4.0), 0.0, 4.0) < 1.0);
    }

    #[test]
    fn suites() {
        let cfg = SimulationConfig::with_rf(1.0);
        assert!(label_suite(&[], &cfg).is_empty());
        let tests: Vec<_> = (0..3)
            .map(|k| straight(&format!("t{k}"), 50.0 + 10.0 * k as f64))
            .collect();
        let results = label_suite(&tests, &cfg);
        assert_eq!(results.len(), 3);
        assert!(results.iter().all(|r| r.as_ref().unwrap().label == Label::Safe));
        let again = label_suite(&tests, &cfg);
        for (a, b) in results.iter().zip(&again) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
    }

    #[test]
    fn bad_config_and_road() {
        let t = straight("s", 100.0);
        assert!(label_test(&t, &SimulationConfig::with_rf(0.0)).is_err());
        let cfg = SimulationConfig {
            oob: 1.5,
            ..Default::default()
        };
        assert!(label_test(&t, &cfg).is_err());
    }

    #[test]
    fn apply_sets_label_fields() {
        let mut t = straight("s", 100.0);
        let cfg = SimulationConfig::default();
        let r = label_test(&t, &cfg).unwrap();
        apply(&mut t, &r, &cfg);
        assert_eq!(t.label, Label::Safe);
        assert_eq!(t.rf, Some(1.5));
        assert!(t.check().is_ok());
    }
}
