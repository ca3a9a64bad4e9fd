//! Receding-horizon steering controller.
//!
//! Each cycle lays a straight reference from the current position along the
//! desired heading, linearizes the bicycle model about it, condenses the
//! tracking objective
//!
//! ```text
//! J = Σ_{k=1..Np} ‖x̃_k‖²_Q + Σ_{j=0..Nc-1} R_w ΔU_j² + Σ_{k=0..Np-1} S_w (U_k − U_ref,k)²
//! ```
//!
//! into a QP over the steering increments `ΔU`, and applies the first move.
//! Steering is held constant after the control horizon.

pub mod qp;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose};
use crate::vehicle::{linearize, LinearModel, VehicleParams, VehicleState};
pub use qp::{solve_qp, QpError, QpOptions, QpProblem, QpSolution};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MpcError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid MPC config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Qp(#[from] QpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    #[serde(rename = "N_p")]
    pub prediction_horizon: usize,
    #[serde(rename = "N_c")]
    pub control_horizon: usize,
    /// Sampling time, s.
    #[serde(rename = "T")]
    pub sample_time: f64,
    /// Diagonal of the (x, y, θ) error weight.
    #[serde(rename = "Q")]
    pub state_weights: [f64; 3],
    #[serde(rename = "R_w")]
    pub increment_weight: f64,
    #[serde(rename = "S_w")]
    pub input_weight: f64,
    pub max_iterations: usize,
    /// Play out the first `N_c` moves open loop before re-solving.
    pub apply_first_nc: bool,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            prediction_horizon: 15,
            control_horizon: 5,
            sample_time: 0.1,
            state_weights: [1.0, 1.0, 0.5],
            increment_weight: 10.0,
            input_weight: 1.0,
            max_iterations: 100,
            apply_first_nc: false,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), MpcError> {
        let bad = |m: &str| Err(MpcError::InvalidConfig(m.into()));
        if self.control_horizon < 1 || self.control_horizon > self.prediction_horizon {
            return bad("need 1 <= N_c <= N_p");
        }
        if !(self.sample_time > 0.0) {
            return bad("T must be > 0");
        }
        if self.state_weights.iter().any(|w| !(*w >= 0.0)) || !(self.input_weight >= 0.0) {
            return bad("weights must be >= 0");
        }
        if !(self.increment_weight > 0.0) {
            return bad("R_w must be > 0");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1");
        }
        Ok(())
    }

    pub fn qp_options(&self) -> QpOptions {
        QpOptions {
            max_iterations: self.max_iterations,
            ..QpOptions::default()
        }
    }
}

/// Steering angle and per-period increment limits, rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringLimits {
    pub max_angle: f64,
    pub max_increment: f64,
}

impl SteeringLimits {
    pub fn new(vehicle: &VehicleParams, dt: f64) -> Self {
        Self {
            max_angle: vehicle.max_steer(),
            max_increment: vehicle.max_steer_step(dt),
        }
    }
}

/// Straight-line reference along the desired heading.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub anchor: Pose,
    pub heading: f64,
    /// Waypoints for steps 1..=N_p.
    pub waypoints: Vec<Pose>,
    /// Reference steering per step; zero for a straight line.
    pub inputs: Vec<f64>,
}

pub fn build_reference(state: &VehicleState, heading: f64, speed: f64, cfg: &MpcConfig) -> Reference {
    let step = speed * cfg.sample_time;
    let (s, c) = heading.sin_cos();
    let waypoints = (1..=cfg.prediction_horizon)
        .map(|k| {
            let d = k as f64 * step;
            Pose::new(state.x + d * c, state.y + d * s, heading)
        })
        .collect();
    Reference {
        anchor: Pose::new(state.x, state.y, heading),
        heading,
        waypoints,
        inputs: vec![0.0; cfg.prediction_horizon],
    }
}

/// Condensed problem plus the maps needed to recover predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcProblem {
    pub qp: QpProblem,
    /// Initial error `x̃_0`.
    pub initial_error: Vector3<f64>,
    /// Stacked predicted errors are `error_offset + error_map · ΔU`.
    pub error_offset: DVector<f64>,
    pub error_map: DMatrix<f64>,
    /// Steering sequence is `steer_prev + steer_map · ΔU`.
    pub steer_map: DMatrix<f64>,
    pub steer_prev: f64,
}

/// Optimal steering plan for one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    pub increments: Vec<f64>,
    /// Cumulated steering over the prediction horizon.
    pub steering: Vec<f64>,
    pub predicted_errors: Vec<Vector3<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub active_constraints: usize,
    pub kkt_residual: f64,
    /// False when the solver hit its iteration limit.
    pub exact: bool,
}

impl MpcProblem {
    pub fn horizon(&self) -> usize {
        self.steer_map.nrows()
    }

    pub fn solution_from(&self, qp: &QpSolution, exact: bool) -> MpcSolution {
        let errors = &self.error_offset + &self.error_map * &qp.x;
        let steering = (&self.steer_map * &qp.x).add_scalar(self.steer_prev);
        MpcSolution {
            increments: qp.x.iter().copied().collect(),
            steering: steering.iter().copied().collect(),
            predicted_errors: (0..self.horizon())
                .map(|k| errors.fixed_rows::<3>(3 * k).into_owned())
                .collect(),
            objective: qp.objective,
            iterations: qp.iterations,
            active_constraints: qp.active_constraints,
            kkt_residual: qp.kkt_residual,
            exact,
        }
    }
}

/// Builds the condensed QP over `ΔU_0..ΔU_{Nc-1}`.
///
/// Predicted errors stack as `x̃ = Ψ x̃_0 + Γ ũ`, with `Ψ_k = A^{k+1}` and
/// `Γ_{k,j} = A^{k-j} B`. The steering sequence is
/// `U_k = δ_prev + Σ_{j ≤ min(k, Nc-1)} ΔU_j`.
pub fn assemble_qp(
    state: &VehicleState,
    reference: &Reference,
    model: &LinearModel,
    cfg: &MpcConfig,
    limits: &SteeringLimits,
    steer_prev: f64,
) -> Result<MpcProblem, MpcError> {
    cfg.validate()?;
    let np = cfg.prediction_horizon;
    let nc = cfg.control_horizon;
    if reference.waypoints.len() != np || reference.inputs.len() != np {
        return Err(MpcError::DimensionMismatch(format!(
            "reference has {} waypoints and {} inputs, horizon is {np}",
            reference.waypoints.len(),
            reference.inputs.len()
        )));
    }

    let initial_error = Vector3::new(
        state.x - reference.anchor.x,
        state.y - reference.anchor.y,
        wrap_angle(state.theta - reference.heading),
    );

    // powers[k] = A^k
    let mut powers = Vec::with_capacity(np + 1);
    powers.push(nalgebra::Matrix3::identity());
    for k in 1..=np {
        powers.push(model.a * powers[k - 1]);
    }

    let mut psi_x0 = DVector::zeros(3 * np);
    let mut gamma = DMatrix::zeros(3 * np, np);
    for k in 0..np {
        psi_x0
            .fixed_rows_mut::<3>(3 * k)
            .copy_from(&(powers[k + 1] * initial_error));
        for j in 0..=k {
            gamma
                .fixed_view_mut::<3, 1>(3 * k, j)
                .copy_from(&(powers[k - j] * model.b));
        }
    }

    let steer_map = DMatrix::from_fn(np, nc, |k, j| if j <= k.min(nc - 1) { 1.0 } else { 0.0 });
    let input_offset = DVector::from_fn(np, |k, _| steer_prev - reference.inputs[k]);
    let error_map = &gamma * &steer_map;
    let error_offset = psi_x0 + &gamma * &input_offset;

    let q_bar = DVector::from_fn(3 * np, |r, _| cfg.state_weights[r % 3]);
    let weighted_map = DMatrix::from_fn(3 * np, nc, |r, c| q_bar[r] * error_map[(r, c)]);
    let weighted_offset = error_offset.component_mul(&q_bar);

    let s_w = cfg.input_weight;
    let hessian = (error_map.transpose() * &weighted_map
        + DMatrix::identity(nc, nc) * cfg.increment_weight
        + steer_map.transpose() * &steer_map * s_w)
        * 2.0;
    let hessian = (&hessian + hessian.transpose()) * 0.5;
    let gradient = (error_map.transpose() * &weighted_offset + steer_map.transpose() * &input_offset * s_w) * 2.0;
    let constant = error_offset.dot(&weighted_offset) + s_w * input_offset.norm_squared();

    let cumulative = DMatrix::from_fn(nc, nc, |i, j| if j <= i { 1.0 } else { 0.0 });
    let qp = QpProblem::new(hessian, gradient)
        .with_bounds(
            DVector::from_element(nc, -limits.max_increment),
            DVector::from_element(nc, limits.max_increment),
        )
        .with_rows(
            cumulative,
            DVector::from_element(nc, -limits.max_angle - steer_prev),
            DVector::from_element(nc, limits.max_angle - steer_prev),
        );
    let qp = QpProblem { constant, ..qp };

    Ok(MpcProblem {
        qp,
        initial_error,
        error_offset,
        error_map,
        steer_map,
        steer_prev,
    })
}

/// Result of one control cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcStep {
    pub command: f64,
    pub solution: MpcSolution,
}

/// Solves one cycle and returns the steering command to apply now.
///
/// An iteration-limited solve still yields a command from the best iterate,
/// clamped into the actuator limits, with a logged warning.
pub fn mpc_step(
    state: &VehicleState,
    heading: f64,
    steer_prev: f64,
    cfg: &MpcConfig,
    vehicle: &VehicleParams,
    speed: f64,
) -> Result<MpcStep, MpcError> {
    let reference = build_reference(state, heading, speed, cfg);
    let model = linearize(heading, 0.0, speed, cfg.sample_time, vehicle);
    let limits = SteeringLimits::new(vehicle, cfg.sample_time);
    let problem = assemble_qp(state, &reference, &model, cfg, &limits, steer_prev)?;
    let solution = match solve_qp(&problem.qp, &cfg.qp_options()) {
        Ok(s) => problem.solution_from(&s, true),
        Err(QpError::MaxIterations(best)) => {
            log::warn!(
                "MPC solve hit {} iterations; applying best iterate (kkt {:.2e})",
                best.iterations,
                best.kkt_residual
            );
            problem.solution_from(&best, false)
        }
        Err(e) => return Err(e.into()),
    };
    let increment = solution.increments[0].clamp(-limits.max_increment, limits.max_increment);
    let command = (steer_prev + increment).clamp(-limits.max_angle, limits.max_angle);
    Ok(MpcStep { command, solution })
}
