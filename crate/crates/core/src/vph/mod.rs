//! Enhanced vector polar histogram (VPH+) direction selection.
//!
//! One planning cycle runs five stages over the 181-beam scan:
//!
//! 1. [`modify_scan`] turns raw ranges into reachable distances `D_i` by
//!    shadowing each beam with every scan point that passes within the vehicle
//!    radius of it.
//! 2. [`cluster_blocks`] and [`merge_blocks`] group nearby returns into
//!    obstacle blocks.
//! 3. [`symbol_function`] masks concave blocks (`B_i`).
//! 4. [`threshold_function`] masks beams closer than the speed-dependent safe
//!    distance (`H_i`).
//! 5. [`cost_function`] scores the remaining beams against goal and heading
//!    deviation and [`select_direction`] picks the best one.
//!
//! All angles inside the histogram are in the scan frame, in degrees, with
//! beam 90 along the current heading.

mod blocks;
mod histogram;
mod modify;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose};
use crate::world::Scan;

pub use blocks::{cluster_blocks, merge_blocks, Block, BlockSet};
pub use histogram::{
    cost_function, score_denominators, select_direction, symbol_function, threshold_function,
    Histogram,
};
pub use modify::modify_scan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum VphError {
    #[error("no feasible direction: every beam is blocked, unsafe or concave")]
    NoFeasibleDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcavityRule {
    /// Concave when both block ends are nearer than the neighbouring ends.
    Literal,
    /// Concave when both block ends are farther than the neighbouring ends.
    Recessed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VphParams {
    /// Vehicle bounding radius, m.
    #[serde(rename = "R")]
    pub robot_radius: f64,
    /// Puffed (inflation) distance, m.
    #[serde(rename = "delta_d")]
    pub puff: f64,
    /// Clearance deducted from every modified range, m.
    #[serde(rename = "R_prime")]
    pub clearance_deduction: f64,
    /// Rolling-window radius for clustering, m.
    #[serde(rename = "L_w")]
    pub window_radius: f64,
    /// Deceleration assumed for the braking term of the safe distance, m/s².
    #[serde(rename = "a_dec")]
    pub deceleration: f64,
    #[serde(rename = "d_margin")]
    pub safety_margin: f64,
    /// Weight on deviation from the goal bearing.
    pub k1: f64,
    /// Weight on deviation from the current heading.
    pub k2: f64,
    pub k3: f64,
    pub concavity_rule: ConcavityRule,
}

impl Default for VphParams {
    fn default() -> Self {
        Self {
            robot_radius: 0.5,
            puff: 0.25,
            clearance_deduction: 0.5,
            window_radius: 8.0,
            deceleration: 2.0,
            safety_margin: 0.2,
            k1: 2.0,
            k2: 1.0,
            k3: 0.5,
            concavity_rule: ConcavityRule::Literal,
        }
    }
}

impl VphParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.robot_radius > 0.0) {
            return Err("R must be > 0".into());
        }
        if !(self.puff >= 0.0) {
            return Err("delta_d must be >= 0".into());
        }
        if !(self.clearance_deduction >= 0.0) {
            return Err("R_prime must be >= 0".into());
        }
        if !(self.window_radius > 0.0) {
            return Err("L_w must be > 0".into());
        }
        if !(self.deceleration > 0.0) {
            return Err("a_dec must be > 0".into());
        }
        if !(self.k1 > self.k2 && self.k2 > 0.0 && self.k3 > 0.0) {
            return Err("cost coefficients need k1 > k2 > 0 and k3 > 0".into());
        }
        Ok(())
    }

    /// Block-separation threshold `R + 2Δd`.
    pub fn block_threshold(&self) -> f64 {
        self.robot_radius + 2.0 * self.puff
    }

    /// Braking distance plus vehicle radius, puff and margin.
    pub fn safe_distance(&self, speed: f64) -> f64 {
        speed * speed / (2.0 * self.deceleration)
            + self.robot_radius
            + self.puff
            + self.safety_margin
    }
}

/// Reachable distance per beam after scan modification.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    pub distances: Vec<f64>,
    /// Beam spacing, radians.
    pub angular_resolution: f64,
}

impl PolarField {
    pub fn new(distances: Vec<f64>, angular_resolution: f64) -> Self {
        Self {
            distances,
            angular_resolution,
        }
    }

    /// 1° field with the given distances.
    pub fn from_degrees(distances: Vec<f64>) -> Self {
        Self::new(distances, 1f64.to_radians())
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn resolution_deg(&self) -> f64 {
        self.angular_resolution.to_degrees()
    }

    /// Beam direction in the scan frame (0 = right, pi/2 = ahead), degrees.
    pub fn beam_deg(&self, i: usize) -> f64 {
        i as f64 * self.resolution_deg()
    }

    /// Cartesian point at distance `D_i` along beam `i`, scan frame.
    pub fn point(&self, i: usize) -> Point2<f64> {
        let a = i as f64 * self.angular_resolution;
        let d = self.distances[i];
        Point2::new(d * a.cos(), d * a.sin())
    }
}

/// Everything one planning cycle produced, for logging and plots.
#[derive(Debug, Clone)]
pub struct VphPlan {
    pub field: PolarField,
    pub blocks: BlockSet,
    pub histogram: Histogram,
}

impl VphPlan {
    /// World-frame heading of the selected beam.
    pub fn desired_heading(&self, vehicle_heading: f64) -> Result<f64, VphError> {
        let m = self.histogram.selected.ok_or(VphError::NoFeasibleDirection)?;
        let center = self.field.len() / 2;
        Ok(wrap_angle(
            vehicle_heading + (m as f64 - center as f64) * self.field.angular_resolution,
        ))
    }
}

/// Goal bearing in the scan frame, degrees, clamped to the field of view.
pub fn goal_bearing_deg(pose: &Pose, goal: &Point2<f64>) -> f64 {
    let world = (goal.y - pose.y).atan2(goal.x - pose.x);
    let rel = wrap_angle(world - pose.theta).to_degrees();
    (90.0 + rel).clamp(0.0, 180.0)
}

/// Runs the full VPH+ pipeline and keeps every intermediate product.
pub fn plan(scan: &Scan, pose: &Pose, goal: &Point2<f64>, speed: f64, params: &VphParams) -> VphPlan {
    let field = modify_scan(scan, params);
    let clustered = cluster_blocks(&field, params);
    let blocks = merge_blocks(&clustered, &field, params);
    let symbol = symbol_function(&blocks, &field, params);
    let threshold = threshold_function(&field, speed, params);
    let bearing = goal_bearing_deg(pose, goal);
    let denominators = score_denominators(&field, bearing, params);
    let costs = cost_function(&field, &symbol, &threshold, bearing, params);
    let selected = select_direction(&costs, bearing, field.resolution_deg()).ok();
    VphPlan {
        histogram: Histogram {
            symbol,
            threshold,
            denominators,
            costs,
            selected,
            goal_bearing: bearing,
            safe_distance: params.safe_distance(speed),
        },
        field,
        blocks,
    }
}

/// Desired world-frame heading for the vehicle at `pose`.
pub fn plan_direction(
    scan: &Scan,
    pose: &Pose,
    goal: &Point2<f64>,
    speed: f64,
    params: &VphParams,
) -> Result<f64, VphError> {
    plan(scan, pose, goal, speed, params).desired_heading(pose.theta)
}
