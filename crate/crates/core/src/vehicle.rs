//! Kinematic bicycle model, its linear error model and forward-Euler
//! discretization.
//!
//! The plant integrates the nonlinear model with RK4; the controller uses
//! the Euler-discretized linearization.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Wheelbase `L`, m.
    pub wheelbase: f64,
    pub wheel_track: f64,
    pub wheel_radius: f64,
    pub max_steer_deg: f64,
    pub max_steer_rate_deg: f64,
    /// Bounding radius used for collision checks, m.
    pub radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 0.6,
            wheel_track: 0.35,
            wheel_radius: 0.09,
            max_steer_deg: 30.0,
            max_steer_rate_deg: 70.0,
            radius: 0.5,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.wheelbase > 0.0) {
            return Err("wheelbase must be > 0".into());
        }
        if !(self.max_steer_deg > 0.0 && self.max_steer_deg < 90.0) {
            return Err("max_steer_deg must lie in (0, 90)".into());
        }
        if !(self.max_steer_rate_deg > 0.0) {
            return Err("max_steer_rate_deg must be > 0".into());
        }
        if !(self.radius > 0.0) {
            return Err("radius must be > 0".into());
        }
        Ok(())
    }

    pub fn max_steer(&self) -> f64 {
        self.max_steer_deg.to_radians()
    }

    pub fn max_steer_rate(&self) -> f64 {
        self.max_steer_rate_deg.to_radians()
    }

    /// Largest steering change in one period of `dt` seconds.
    pub fn max_steer_step(&self, dt: f64) -> f64 {
        self.max_steer_rate() * dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    /// Front-wheel angle, rad.
    pub steer: f64,
}

impl VehicleState {
    pub fn at_pose(pose: Pose) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            theta: wrap_angle(pose.theta),
            steer: 0.0,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }
}

/// `(ẋ, ẏ, θ̇) = (v cos θ, v sin θ, v tan δ / L)`.
pub fn derivative(theta: f64, steer: f64, v: f64, params: &VehicleParams) -> Vector3<f64> {
    Vector3::new(
        v * theta.cos(),
        v * theta.sin(),
        v * steer.tan() / params.wheelbase,
    )
}

/// Slews the wheel toward `steer_cmd` within the rate and angle limits, then
/// integrates the pose over `dt` with classic RK4 holding that wheel angle.
pub fn step_nonlinear(
    state: &VehicleState,
    steer_cmd: f64,
    v: f64,
    dt: f64,
    params: &VehicleParams,
) -> VehicleState {
    let max_step = params.max_steer_step(dt);
    let limit = params.max_steer();
    let steer = (state.steer + (steer_cmd - state.steer).clamp(-max_step, max_step))
        .clamp(-limit, limit);

    let f = |p: &Vector3<f64>| derivative(p.z, steer, v, params);
    let p0 = Vector3::new(state.x, state.y, state.theta);
    let k1 = f(&p0);
    let k2 = f(&(p0 + k1 * (dt / 2.0)));
    let k3 = f(&(p0 + k2 * (dt / 2.0)));
    let k4 = f(&(p0 + k3 * dt));
    let p1 = p0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    VehicleState {
        x: p1.x,
        y: p1.y,
        theta: wrap_angle(p1.z),
        steer,
    }
}

/// One forward-Euler step of the nonlinear model, no actuator limits. The
/// heading is left unwrapped.
pub fn step_euler(pose: &Vector3<f64>, steer: f64, v: f64, dt: f64, params: &VehicleParams) -> Vector3<f64> {
    pose + derivative(pose.z, steer, v, params) * dt
}

/// Discrete error model `x̃(k+1) = A x̃(k) + B ũ(k)` about a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
    pub theta_ref: f64,
    pub steer_ref: f64,
    pub speed_ref: f64,
    pub dt: f64,
}

/// Jacobians of the kinematic model about `(θ_r, δ_r, v_r)`, discretized with
/// forward Euler over `dt`.
pub fn linearize(theta_ref: f64, steer_ref: f64, speed_ref: f64, dt: f64, params: &VehicleParams) -> LinearModel {
    let mut a = Matrix3::identity();
    a[(0, 2)] = -speed_ref * theta_ref.sin() * dt;
    a[(1, 2)] = speed_ref * theta_ref.cos() * dt;
    let cos_d = steer_ref.cos();
    let b = Vector3::new(0.0, 0.0, speed_ref * dt / (params.wheelbase * cos_d * cos_d));
    LinearModel {
        a,
        b,
        theta_ref,
        steer_ref,
        speed_ref,
        dt,
    }
}

pub fn predict_linear(model: &LinearModel, error: &Vector3<f64>, input_error: f64) -> Vector3<f64> {
    model.a * error + model.b * input_error
}
