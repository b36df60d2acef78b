//! Road attributes and turn statistics used as classifier inputs.

use rayon::prelude::*;

use crate::error::Result;
use crate::road::{self, Label, RoadTest, SegmentKind, SegmentedRoad};

/// Names of the model inputs, in [`FeatureVector::values`] order.
pub const FEATURE_NAMES: [&str; 16] = [
    "direct_distance",
    "road_distance",
    "num_l_turns",
    "num_r_turns",
    "num_straights",
    "total_angle",
    "median_angle",
    "std_angle",
    "max_angle",
    "min_angle",
    "mean_angle",
    "median_pivot_off",
    "std_pivot_off",
    "max_pivot_off",
    "min_pivot_off",
    "mean_pivot_off",
];

pub const NUM_FEATURES: usize = FEATURE_NAMES.len();

/// Summary statistics of a sample; all zero for an empty sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        if values.is_empty() {
            return Stats::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Stats {
            median,
            std: var.sqrt(),
            max: sorted[n - 1],
            min: sorted[0],
            mean: mean.clamp(sorted[0], sorted[n - 1]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub test_id: String,
    pub direct_distance: f64,
    pub road_distance: f64,
    pub num_l_turns: usize,
    pub num_r_turns: usize,
    pub num_straights: usize,
    pub total_angle: f64,
    pub angle: Stats,
    pub pivot_off: Stats,
    pub sim_time: Option<f64>,
    pub label: Label,
}

impl FeatureVector {
    /// Model inputs ordered as [`FEATURE_NAMES`].
    pub fn values(&self) -> [f64; NUM_FEATURES] {
        [
            self.direct_distance,
            self.road_distance,
            self.num_l_turns as f64,
            self.num_r_turns as f64,
            self.num_straights as f64,
            self.total_angle,
            self.angle.median,
            self.angle.std,
            self.angle.max,
            self.angle.min,
            self.angle.mean,
            self.pivot_off.median,
            self.pivot_off.std,
            self.pivot_off.max,
            self.pivot_off.min,
            self.pivot_off.mean,
        ]
    }

    pub fn num_segments(&self) -> usize {
        self.num_l_turns + self.num_r_turns + self.num_straights
    }
}

/// Aggregates the features of an already segmented road. Angle and radius
/// statistics only consider turn segments.
pub fn features_from_road(test: &RoadTest, road: &SegmentedRoad) -> FeatureVector {
    let first = test.control_points[0];
    let last = test.control_points[test.control_points.len() - 1];

    let count = |kind| road.segments.iter().filter(|s| s.kind == kind).count();
    let turns: Vec<_> = road
        .segments
        .iter()
        .filter(|s| s.kind != SegmentKind::Straight)
        .collect();
    let angles: Vec<f64> = turns.iter().map(|s| s.turn_angle).collect();
    let radii: Vec<f64> = turns.iter().filter_map(|s| s.pivot_radius).collect();

    FeatureVector {
        test_id: test.test_id.clone(),
        direct_distance: first.distance(&last),
        road_distance: road.length(),
        num_l_turns: count(SegmentKind::LeftTurn),
        num_r_turns: count(SegmentKind::RightTurn),
        num_straights: count(SegmentKind::Straight),
        total_angle: angles.iter().sum(),
        angle: Stats::of(&angles),
        pivot_off: Stats::of(&radii),
        sim_time: test.sim_time,
        label: test.label,
    }
}

pub fn extract_features(test: &RoadTest) -> Result<FeatureVector> {
    let road = road::segment_road(test)?;
    Ok(features_from_road(test, &road))
}

/// Extracts every test independently; failures do not stop the batch.
pub fn extract_suite(tests: &[RoadTest]) -> Vec<Result<FeatureVector>> {
    tests.par_iter().map(extract_features).collect()
}
