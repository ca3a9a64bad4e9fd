//! Obstacle worlds and the simulated 181-beam laser range finder.
//!
//! A [`Scenario`] is a set of closed polygons plus a start pose and a goal.
//! [`raycast_scan`] produces a [`Scan`] whose beam `i` points at `i` degrees
//! in the vehicle frame, with beam 90 straight ahead, beam 0 to the right and
//! beam 180 to the left.

mod builtin;

use std::path::Path;

use nalgebra::{Point2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{ray_segment_distance, Polygon, Pose};

pub use builtin::{builtin_names, builtin_scenario};

/// Vehicle radius used when validating scenario files.
pub const DEFAULT_VALIDATION_RADIUS: f64 = 0.5;

/// Shortest range a beam reports; a sensor sitting on an edge still sees a
/// positive distance.
pub const MIN_RANGE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("invalid lidar spec: {0}")]
    Lidar(String),
}

/// On-disk scenario layout: lengths in meters, angles in radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    obstacles: Vec<Vec<[f64; 2]>>,
    start: [f64; 3],
    goal: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub name: String,
    pub obstacles: Vec<Polygon>,
    pub start: Pose,
    pub goal: Point2<f64>,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = WorldError;

    fn try_from(file: ScenarioFile) -> Result<Self, Self::Error> {
        let scenario = Scenario {
            name: file.name,
            obstacles: file
                .obstacles
                .iter()
                .map(|poly| Polygon::from_coords(poly))
                .collect(),
            start: Pose::new(file.start[0], file.start[1], file.start[2]),
            goal: Point2::new(file.goal[0], file.goal[1]),
        };
        scenario.validate(DEFAULT_VALIDATION_RADIUS)?;
        Ok(scenario)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        ScenarioFile {
            name: s.name,
            obstacles: s
                .obstacles
                .iter()
                .map(|p| p.vertices().iter().map(|v| [v.x, v.y]).collect())
                .collect(),
            start: [s.start.x, s.start.y, s.start.theta],
            goal: [s.goal.x, s.goal.y],
        }
    }
}

impl Scenario {
    /// Checks polygon shape and that start and goal keep more than `radius`
    /// of clearance from every obstacle.
    pub fn validate(&self, radius: f64) -> Result<(), WorldError> {
        for (k, poly) in self.obstacles.iter().enumerate() {
            if poly.vertices().len() < 3 {
                return Err(WorldError::Validation(format!(
                    "obstacle {k} has {} vertices, need at least 3",
                    poly.vertices().len()
                )));
            }
            if poly.vertices().iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
                return Err(WorldError::Validation(format!(
                    "obstacle {k} has non-finite vertices"
                )));
            }
            if poly.signed_area().abs() < 1e-12 {
                return Err(WorldError::Validation(format!("obstacle {k} has zero area")));
            }
        }
        let start = self.start.position();
        for (label, pt) in [("start", start), ("goal", self.goal)] {
            if !pt.x.is_finite() || !pt.y.is_finite() {
                return Err(WorldError::Validation(format!("{label} is not finite")));
            }
            let clearance = self.clearance(&pt);
            if clearance <= radius {
                return Err(WorldError::Validation(format!(
                    "{label} ({:.3}, {:.3}) is within {radius} m of an obstacle (distance {clearance:.3})",
                    pt.x, pt.y
                )));
            }
        }
        Ok(())
    }

    /// Signed distance from `pt` to the nearest obstacle boundary, negative
    /// inside an obstacle, `f64::MAX` in an empty world.
    pub fn clearance(&self, pt: &Point2<f64>) -> f64 {
        self.obstacles
            .iter()
            .map(|p| p.signed_distance(pt))
            .fold(f64::MAX, f64::min)
    }

    /// Rigid motion of the whole scenario (obstacles, start and goal).
    pub fn transformed(&self, rotation: f64, translation: Vector2<f64>) -> Self {
        let (s, c) = rotation.sin_cos();
        let move_pt = |p: Point2<f64>| Point2::new(c * p.x - s * p.y, s * p.x + c * p.y) + translation;
        let start = move_pt(self.start.position());
        Self {
            name: self.name.clone(),
            obstacles: self
                .obstacles
                .iter()
                .map(|p| p.transformed(rotation, translation))
                .collect(),
            start: Pose::new(start.x, start.y, self.start.theta + rotation),
            goal: move_pt(self.goal),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses a scenario from JSON text. `origin` labels error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, WorldError> {
    serde_json::from_str::<ScenarioFile>(text)
        .map_err(|e| WorldError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
        .and_then(Scenario::try_from)
}

/// Loads a scenario from a built-in name (see [`builtin_names`]) or a JSON
/// file path.
pub fn load_scenario(source: &str) -> Result<Scenario, WorldError> {
    if let Some(s) = builtin_scenario(source) {
        return Ok(s);
    }
    load_scenario_file(Path::new(source))
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, WorldError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: display.clone(),
        source,
    })?;
    parse_scenario(&text, &display)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSpec {
    pub beam_count: usize,
    pub angular_resolution_deg: f64,
    pub max_range: f64,
    /// Standard deviation of additive Gaussian range noise. Zero is exact.
    pub range_noise_std: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            beam_count: 181,
            angular_resolution_deg: 1.0,
            max_range: 80.0,
            range_noise_std: 0.0,
        }
    }
}

impl LidarSpec {
    pub const FOV_DEG: f64 = 180.0;

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.angular_resolution_deg > 0.0) || !(self.max_range > 0.0) {
            return Err(WorldError::Lidar(
                "resolution and max_range must be positive".into(),
            ));
        }
        let expected = Self::FOV_DEG / self.angular_resolution_deg + 1.0;
        if (expected - self.beam_count as f64).abs() > 1e-9 {
            return Err(WorldError::Lidar(format!(
                "beam_count {} does not cover {}° at {}° resolution",
                self.beam_count,
                Self::FOV_DEG,
                self.angular_resolution_deg
            )));
        }
        if self.range_noise_std < 0.0 {
            return Err(WorldError::Lidar("range_noise_std must be >= 0".into()));
        }
        Ok(())
    }

    pub fn angular_resolution(&self) -> f64 {
        self.angular_resolution_deg.to_radians()
    }
}

/// One sweep of range readings, indexed by beam.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub ranges: Vec<f64>,
    /// Angle between neighbouring beams, radians.
    pub angular_resolution: f64,
    pub max_range: f64,
}

impl Scan {
    pub fn new(ranges: Vec<f64>, angular_resolution: f64, max_range: f64) -> Self {
        Self {
            ranges,
            angular_resolution,
            max_range,
        }
    }

    /// A 181-beam, 1° scan with every beam at `range`.
    pub fn uniform(range: f64) -> Self {
        let spec = LidarSpec::default();
        Self::new(vec![range; spec.beam_count], spec.angular_resolution(), spec.max_range)
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Index of the beam pointing straight ahead.
    pub fn center_index(&self) -> usize {
        self.ranges.len() / 2
    }

    /// Beam direction relative to the vehicle heading, radians.
    pub fn beam_offset(&self, i: usize) -> f64 {
        (i as f64 - self.center_index() as f64) * self.angular_resolution
    }

    pub fn min_range(&self) -> f64 {
        self.ranges.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Casts every beam of `spec` from `pose` against the scenario's polygon
/// edges. Noise-free; see [`add_range_noise`].
pub fn raycast_scan(scenario: &Scenario, pose: &Pose, spec: &LidarSpec) -> Scan {
    let origin = pose.position();
    let res = spec.angular_resolution();
    let center = (spec.beam_count / 2) as f64;
    let ranges = (0..spec.beam_count)
        .map(|i| {
            let angle = pose.theta + (i as f64 - center) * res;
            let dir = Vector2::new(angle.cos(), angle.sin());
            let hit = scenario
                .obstacles
                .iter()
                .flat_map(|poly| poly.edges())
                .filter_map(|(p, q)| ray_segment_distance(&origin, &dir, &p, &q))
                .fold(spec.max_range, f64::min);
            hit.clamp(MIN_RANGE, spec.max_range)
        })
        .collect();
    Scan::new(ranges, res, spec.max_range)
}

/// Adds zero-mean Gaussian noise to every beam, keeping readings in
/// `(0, max_range]`.
pub fn add_range_noise<R: Rng + ?Sized>(scan: &mut Scan, std_dev: f64, rng: &mut R) {
    if std_dev <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, std_dev).expect("finite positive std_dev");
    for r in &mut scan.ranges {
        *r = (*r + normal.sample(rng)).clamp(MIN_RANGE, scan.max_range);
    }
}
