//! Road geometry: test cases, spline interpolation of the road spine and
//! decomposition of the driving path into straight and turning segments.
//!
//! Coordinates are meters. Headings and turn classification use the x-y
//! projection (counterclockwise is a left turn); `z` only contributes to
//! arc length.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default arc-length spacing of the interpolated path.
pub const DEFAULT_STEP: f64 = 1.0;
/// Default heading-change threshold, degrees per [`REFERENCE_LENGTH`] of path.
pub const DEFAULT_ANGLE_THRESHOLD: f64 = 5.0;
/// Default width of one lane. Roads have two lanes.
pub const DEFAULT_LANE_WIDTH: f64 = 4.0;
/// Path length over which `angle_threshold` is measured (one control-point spacing).
pub const REFERENCE_LENGTH: f64 = 10.0;
/// Runs shorter than this that also turn less than the angle threshold are
/// folded into their neighbours.
pub const MIN_SEGMENT_LENGTH: f64 = 5.0;

const MIN_POINT_DISTANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub const fn flat(x: f64, y: f64) -> Self {
        Point3 { x, y, z: 0.0 }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn planar_distance(&self, other: &Point3) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(p: [f64; 3]) -> Self {
        Point3::new(p[0], p[1], p[2])
    }
}

/// Execution outcome of a test, unsafe meaning the vehicle left its lane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    #[default]
    Unlabeled,
    Safe,
    Unsafe,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Unlabeled => "unlabeled",
            Label::Safe => "safe",
            Label::Unsafe => "unsafe",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "unlabeled" => Some(Label::Unlabeled),
            "safe" => Some(Label::Safe),
            "unsafe" => Some(Label::Unsafe),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A lane-keeping test: a road spine given by control points.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadTest {
    pub test_id: String,
    pub control_points: Vec<Point3>,
    pub lane_width: f64,
    pub label: Label,
    pub sim_time: Option<f64>,
    pub rf: Option<f64>,
    pub oob: Option<f64>,
}

impl RoadTest {
    /// Builds an unlabeled test and checks its invariants.
    pub fn new(test_id: impl Into<String>, control_points: Vec<Point3>, lane_width: f64) -> Result<Self> {
        let test = RoadTest {
            test_id: test_id.into(),
            control_points,
            lane_width,
            label: Label::Unlabeled,
            sim_time: None,
            rf: None,
            oob: None,
        };
        test.check()?;
        Ok(test)
    }

    pub fn check(&self) -> Result<()> {
        if self.control_points.len() < 2 {
            return Err(Error::InvalidRoad(format!(
                "{}: needs at least 2 control points, got {}",
                self.test_id,
                self.control_points.len()
            )));
        }
        if let Some(p) = self
            .control_points
            .iter()
            .find(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::InvalidRoad(format!(
                "{}: non-finite control point {:?}",
                self.test_id, p
            )));
        }
        if let Some(i) = self
            .control_points
            .windows(2)
            .position(|w| w[0].distance(&w[1]) <= MIN_POINT_DISTANCE)
        {
            return Err(Error::InvalidRoad(format!(
                "{}: control points {} and {} coincide",
                self.test_id,
                i,
                i + 1
            )));
        }
        if !(self.lane_width > 0.0 && self.lane_width.is_finite()) {
            return Err(Error::InvalidRoad(format!(
                "{}: lane width must be positive",
                self.test_id
            )));
        }
        if (self.label == Label::Unlabeled) != self.sim_time.is_none() {
            return Err(Error::InvalidRoad(format!(
                "{}: label and simulation time must be present together",
                self.test_id
            )));
        }
        Ok(())
    }

    /// The same road driven in the opposite direction.
    pub fn reversed(&self) -> RoadTest {
        let mut t = self.clone();
        t.control_points.reverse();
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Straight,
    LeftTurn,
    RightTurn,
}

impl SegmentKind {
    fn direction(self) -> f64 {
        match self {
            SegmentKind::LeftTurn => 1.0,
            SegmentKind::Straight => 0.0,
            SegmentKind::RightTurn => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// First path point of the segment.
    pub start: usize,
    /// Last path point of the segment; shared with the next segment's `start`.
    pub end: usize,
    pub length: f64,
    /// Absolute heading change in degrees, 0 for straights.
    pub turn_angle: f64,
    /// Mean turn radius, `None` for straights.
    pub pivot_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedRoad {
    pub segments: Vec<Segment>,
    pub interpolated_path: Vec<Point3>,
}

impl SegmentedRoad {
    pub fn length(&self) -> f64 {
        path_length(&self.interpolated_path)
    }
}

pub fn path_length(path: &[Point3]) -> f64 {
    path.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// Natural cubic spline through `values` at strictly increasing knots `t`.
struct Spline {
    t: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl Spline {
    fn natural(t: &[f64], values: &[f64]) -> Spline {
        let n = t.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let h0 = t[i] - t[i - 1];
                let h1 = t[i + 1] - t[i];
                diag[k] = 2.0 * (h0 + h1);
                upper[k] = h1;
                rhs[k] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for k in 1..m {
                let lower = t[k + 1] - t[k];
                let w = lower / diag[k - 1];
                diag[k] -= w * upper[k - 1];
                rhs[k] -= w * rhs[k - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                second[k + 1] = (rhs[k] - upper[k] * second[k + 2]) / diag[k];
            }
        }
        Spline {
            t: t.to_vec(),
            values: values.to_vec(),
            second,
        }
    }

    fn eval(&self, interval: usize, u: f64) -> f64 {
        let (t0, t1) = (self.t[interval], self.t[interval + 1]);
        let h = t1 - t0;
        let a = (t1 - u) / h;
        let b = (u - t0) / h;
        a * self.values[interval]
            + b * self.values[interval + 1]
            + ((a * a * a - a) * self.second[interval] + (b * b * b - b) * self.second[interval + 1]) * h * h / 6.0
    }
}

struct SpaceCurve {
    x: Spline,
    y: Spline,
    z: Spline,
}

impl SpaceCurve {
    fn eval(&self, interval: usize, u: f64) -> Point3 {
        Point3::new(
            self.x.eval(interval, u),
            self.y.eval(interval, u),
            self.z.eval(interval, u),
        )
    }
}

/// Resamples the road spine at uniform arc length.
///
/// The spine is a natural cubic spline through the control points,
/// parameterised by cumulative chord length. The path is cut into
/// `ceil(length / step)` equal pieces, so spacing never exceeds `step` and a
/// reversed road yields the mirrored samples.
pub fn interpolate(test: &RoadTest, step: f64) -> Result<Vec<Point3>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "interpolation step must be positive, got {step}"
        )));
    }
    test.check()?;
    let pts = &test.control_points;

    let mut knots = Vec::with_capacity(pts.len());
    knots.push(0.0);
    for w in pts.windows(2) {
        knots.push(knots.last().unwrap() + w[0].distance(&w[1]));
    }
    let curve = SpaceCurve {
        x: Spline::natural(&knots, &pts.iter().map(|p| p.x).collect::<Vec<_>>()),
        y: Spline::natural(&knots, &pts.iter().map(|p| p.y).collect::<Vec<_>>()),
        z: Spline::natural(&knots, &pts.iter().map(|p| p.z).collect::<Vec<_>>()),
    };

    // Dense polyline used to invert arc length: (interval, parameter, arc length).
    let dense_step = step.min(0.5) / 10.0;
    let mut dense: Vec<(usize, f64, f64)> = vec![(0, 0.0, 0.0)];
    let mut prev = pts[0];
    let mut arc = 0.0;
    for i in 0..pts.len() - 1 {
        let h = knots[i + 1] - knots[i];
        let pieces = ((h / dense_step).ceil() as usize).max(8);
        for k in 1..=pieces {
            let u = if k == pieces {
                knots[i + 1]
            } else {
                knots[i] + h * k as f64 / pieces as f64
            };
            let p = curve.eval(i, u);
            arc += prev.distance(&p);
            dense.push((i, u, arc));
            prev = p;
        }
    }
    let total = arc;
    let count = ((total / step) - 1e-9).ceil().max(1.0) as usize;
    let spacing = total / count as f64;

    let mut out = Vec::with_capacity(count + 1);
    out.push(pts[0]);
    let mut cursor = 1;
    for k in 1..count {
        let target = spacing * k as f64;
        while dense[cursor].2 < target {
            cursor += 1;
        }
        let (i1, u1, s1) = dense[cursor];
        let (i0, u0, s0) = dense[cursor - 1];
        let u0 = if i0 == i1 { u0 } else { knots[i1] };
        let frac = if s1 > s0 { (target - s0) / (s1 - s0) } else { 0.0 };
        out.push(curve.eval(i1, u0 + frac * (u1 - u0)));
    }
    out.push(*pts.last().unwrap());
    Ok(out)
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Planar headings of each edge; edges with no planar extent inherit the
/// previous heading.
pub(crate) fn edge_headings(path: &[Point3]) -> Vec<f64> {
    let mut headings = Vec::with_capacity(path.len().saturating_sub(1));
    let mut last = 0.0;
    for w in path.windows(2) {
        let (dx, dy) = (w[1].x - w[0].x, w[1].y - w[0].y);
        if dx.hypot(dy) > MIN_POINT_DISTANCE {
            last = dy.atan2(dx);
        }
        headings.push(last);
    }
    headings
}

/// Signed curvature at every path point (1/m, left positive). End points
/// copy their neighbour.
pub fn point_curvatures(path: &[Point3]) -> Vec<f64> {
    let n = path.len();
    let mut kappa = vec![0.0; n];
    if n < 3 {
        return kappa;
    }
    let headings = edge_headings(path);
    let lengths: Vec<f64> = path.windows(2).map(|w| w[0].distance(&w[1])).collect();
    for i in 1..n - 1 {
        let turn = wrap_angle(headings[i] - headings[i - 1]);
        kappa[i] = turn / (0.5 * (lengths[i - 1] + lengths[i]));
    }
    kappa[0] = kappa[1];
    kappa[n - 1] = kappa[n - 2];
    kappa
}

#[derive(Clone, Debug)]
struct Run {
    kind: SegmentKind,
    start: usize,
    end: usize,
    length: f64,
    turning: f64,
}

fn runs_of(kinds: &[SegmentKind], lengths: &[f64], turning: &[f64]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (j, &kind) in kinds.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.kind == kind => {
                run.end = j + 1;
                run.length += lengths[j];
                run.turning += turning[j];
            }
            _ => runs.push(Run {
                kind,
                start: j,
                end: j + 1,
                length: lengths[j],
                turning: turning[j],
            }),
        }
    }
    runs
}

/// Splits a path into straight, left-turn and right-turn segments.
///
/// Each edge is classified by its heading change: below
/// `angle_threshold` degrees per [`REFERENCE_LENGTH`] it is straight,
/// otherwise a turn in the direction of the change. Runs of equally
/// classified edges form segments; runs that are both shorter than
/// [`MIN_SEGMENT_LENGTH`] and turn less than `angle_threshold` are dissolved
/// into the nearest surviving runs.
///
/// Paths with fewer than two points yield no segments.
pub fn segmentize(path: &[Point3], angle_threshold: f64) -> SegmentedRoad {
    let n = path.len();
    if n < 2 {
        return SegmentedRoad {
            segments: Vec::new(),
            interpolated_path: path.to_vec(),
        };
    }
    let threshold = angle_threshold.to_radians();
    let lengths: Vec<f64> = path.windows(2).map(|w| w[0].distance(&w[1])).collect();
    let kappa = point_curvatures(path);
    let turning: Vec<f64> = (0..n - 1)
        .map(|j| lengths[j] * 0.5 * (kappa[j] + kappa[j + 1]))
        .collect();
    let edge_threshold = |j: usize| threshold * lengths[j] / REFERENCE_LENGTH;
    let classify = |turn: f64, limit: f64| {
        if turn.abs() < limit {
            SegmentKind::Straight
        } else if turn > 0.0 {
            SegmentKind::LeftTurn
        } else {
            SegmentKind::RightTurn
        }
    };

    let mut kinds: Vec<SegmentKind> = (0..n - 1).map(|j| classify(turning[j], edge_threshold(j))).collect();
    let runs = runs_of(&kinds, &lengths, &turning);
    let significant: Vec<bool> = runs
        .iter()
        .map(|r| r.length >= MIN_SEGMENT_LENGTH || (r.kind != SegmentKind::Straight && r.turning.abs() >= threshold))
        .collect();

    if !significant.iter().any(|&s| s) {
        let total_len: f64 = lengths.iter().sum();
        let total_turn: f64 = turning.iter().sum();
        let kind = classify(total_turn, threshold * total_len / REFERENCE_LENGTH);
        kinds.iter_mut().for_each(|k| *k = kind);
    } else {
        for (r, run) in runs.iter().enumerate() {
            if significant[r] {
                continue;
            }
            let prev = runs[..r].iter().zip(&significant).rposition(|(_, &s)| s);
            let next = (r + 1..runs.len()).find(|&q| significant[q]);
            for j in run.start..run.end {
                let target = match (prev, next) {
                    (Some(p), None) => p,
                    (None, Some(q)) => q,
                    (Some(p), Some(q)) => {
                        let to_prev = j + 1 - runs[p].end;
                        let to_next = runs[q].start - j;
                        if to_prev != to_next {
                            if to_prev < to_next {
                                p
                            } else {
                                q
                            }
                        } else {
                            let lean = (turning[j] / edge_threshold(j)).clamp(-1.0, 1.0);
                            let gap_p = (runs[p].kind.direction() - lean).abs();
                            let gap_q = (runs[q].kind.direction() - lean).abs();
                            if gap_q < gap_p {
                                q
                            } else {
                                p
                            }
                        }
                    }
                    (None, None) => unreachable!("at least one significant run exists"),
                };
                kinds[j] = runs[target].kind;
            }
        }
    }

    let segments = runs_of(&kinds, &lengths, &turning)
        .into_iter()
        .map(|run| {
            let (turn_angle, pivot_radius) = match run.kind {
                SegmentKind::Straight => (0.0, None),
                _ => {
                    let sweep = run.turning.abs();
                    (sweep.to_degrees(), Some(run.length / sweep))
                }
            };
            Segment {
                kind: run.kind,
                start: run.start,
                end: run.end,
                length: run.length,
                turn_angle,
                pivot_radius,
            }
        })
        .collect();

    SegmentedRoad {
        segments,
        interpolated_path: path.to_vec(),
    }
}

/// Interpolates and segmentizes with the default step and threshold.
pub fn segment_road(test: &RoadTest) -> Result<SegmentedRoad> {
    let path = interpolate(test, DEFAULT_STEP)?;
    Ok(segmentize(&path, DEFAULT_ANGLE_THRESHOLD))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// The test breaks a structural invariant.
    Malformed(String),
    OutOfBounds {
        point: usize,
    },
    TooSharp {
        radius: f64,
        min_radius: f64,
    },
    SelfIntersection {
        first: usize,
        second: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Malformed(msg) => write!(f, "malformed road: {msg}"),
            Violation::OutOfBounds { point } => write!(f, "path point {point} lies outside the map"),
            Violation::TooSharp { radius, min_radius } => {
                write!(f, "turn radius {radius:.2} m is below the {min_radius:.2} m minimum")
            }
            Violation::SelfIntersection { first, second } => {
                write!(f, "road overlaps itself between path points {first} and {second}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Validity {
    Valid,
    Invalid(Violation),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Checks a road against the map, turn-radius and overlap rules, in that
/// order, reporting the first rule that fails.
pub fn validate(test: &RoadTest, map_size: f64) -> Validity {
    let path = match interpolate(test, DEFAULT_STEP) {
        Ok(p) => p,
        Err(e) => return Validity::Invalid(Violation::Malformed(e.to_string())),
    };
    if let Some(point) = path
        .iter()
        .position(|p| !(0.0..=map_size).contains(&p.x) || !(0.0..=map_size).contains(&p.y))
    {
        return Validity::Invalid(Violation::OutOfBounds { point });
    }

    let min_radius = 2.0 * test.lane_width;
    let road = segmentize(&path, DEFAULT_ANGLE_THRESHOLD);
    if let Some(radius) = road
        .segments
        .iter()
        .filter_map(|s| s.pivot_radius)
        .min_by(|a, b| a.total_cmp(b))
    {
        if radius < min_radius {
            return Validity::Invalid(Violation::TooSharp { radius, min_radius });
        }
    }

    match find_overlap(&path, test.lane_width) {
        Some((first, second)) => Validity::Invalid(Violation::SelfIntersection { first, second }),
        None => Validity::Valid,
    }
}

/// Finds two spine points that are far apart along the road but closer than
/// the full road width, i.e. where the buffered road polygon overlaps itself.
fn find_overlap(path: &[Point3], lane_width: f64) -> Option<(usize, usize)> {
    let road_width = 2.0 * lane_width;
    let window = 3.0 * lane_width;
    let mut arc = Vec::with_capacity(path.len());
    arc.push(0.0);
    for w in path.windows(2) {
        arc.push(arc.last().unwrap() + w[0].distance(&w[1]));
    }

    let cell = |p: &Point3| ((p.x / road_width).floor() as i64, (p.y / road_width).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in path.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in bucket {
                        if arc[i] - arc[j] > window && p.planar_distance(&path[j]) < road_width {
                            return Some((j, i));
                        }
                    }
                }
            }
        }
        grid.entry((cx, cy)).or_default().push(i);
    }
    None
}
