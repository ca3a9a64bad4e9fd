//! Closed-loop executive: scan → VPH+ → steering controller → plant.

mod log;

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose};
use crate::mpc::{mpc_step, MpcConfig};
use crate::vehicle::{step_nonlinear, VehicleParams, VehicleState};
use crate::vph::{self, VphParams};
use crate::world::{add_range_noise, raycast_scan, LidarSpec, Scenario};

pub use self::log::{
    read_csv, read_trajectory_csv, write_csv, write_trajectory_csv, EpisodeRecord, HistogramRow,
    MpcDiagnostic,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
    #[error("episode log is empty")]
    EmptyLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    /// Pure-pursuit steering straight at the VPH+ direction.
    VphOnly,
    /// MPC tracking of the VPH+ direction.
    VphMpc,
}

impl ControllerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerMode::VphOnly => "vph_only",
            ControllerMode::VphMpc => "vph_mpc",
        }
    }
}

impl std::str::FromStr for ControllerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vph_only" => Ok(Self::VphOnly),
            "vph_mpc" => Ok(Self::VphMpc),
            other => Err(format!("unknown controller mode '{other}' (vph_only | vph_mpc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Cruise speed, m/s.
    pub v_r: f64,
    pub goal_tolerance: f64,
    pub max_steps: usize,
    pub controller_mode: ControllerMode,
    /// Cycles without a feasible direction tolerated before giving up.
    pub hold_cycles: usize,
    pub noise_seed: u64,
    pub vph: VphParams,
    pub mpc: MpcConfig,
    pub vehicle: VehicleParams,
    pub lidar: LidarSpec,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            v_r: 2.0,
            goal_tolerance: 0.5,
            max_steps: 3000,
            controller_mode: ControllerMode::VphMpc,
            hold_cycles: 10,
            noise_seed: 0,
            vph: VphParams::default(),
            mpc: MpcConfig::default(),
            vehicle: VehicleParams::default(),
            lidar: LidarSpec::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn with_mode(mode: ControllerMode) -> Self {
        Self {
            controller_mode: mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.goal_tolerance > 0.0) {
            return bad("goal_tolerance must be > 0".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be > 0".into());
        }
        if !(self.v_r >= 0.0) {
            return bad("v_r must be >= 0".into());
        }
        self.vph.validate().or_else(|e| bad(format!("vph: {e}")))?;
        self.vehicle.validate().or_else(|e| bad(format!("vehicle: {e}")))?;
        self.mpc.validate().or_else(|e| bad(format!("mpc: {e}")))?;
        self.lidar.validate().or_else(|e| bad(format!("lidar: {e}")))?;
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.mpc.sample_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    GoalReached,
    Collision,
    NoFeasibleDirection,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub path_length: f64,
    /// Control periods between the first and last record.
    pub steps: usize,
    pub min_clearance: f64,
    /// Largest `|δ_{k+1} − δ_k| / T`, deg/s.
    pub max_steer_rate_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scenario: String,
    pub mode: ControllerMode,
    pub dt: f64,
    pub records: Vec<EpisodeRecord>,
    pub outcome: Outcome,
    pub metrics: Metrics,
}

/// Per-cycle diagnostics gathered alongside the log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub histograms: Vec<HistogramRow>,
    pub mpc: Vec<MpcDiagnostic>,
}

/// Signed clearance of a disc of radius `radius` at `pose`: distance from the
/// centre to the nearest obstacle edge minus the radius, negative inside an
/// obstacle. An empty world returns `f64::MAX`.
pub fn check_collision(scenario: &Scenario, pose: &Pose, radius: f64) -> f64 {
    if scenario.obstacles.is_empty() {
        return f64::MAX;
    }
    scenario.clearance(&pose.position()) - radius
}

pub fn compute_metrics(records: &[EpisodeRecord], dt: f64) -> Result<Metrics, SimError> {
    if records.is_empty() {
        return Err(SimError::EmptyLog);
    }
    let path_length = records
        .windows(2)
        .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
        .sum();
    let min_clearance = records.iter().map(|r| r.clearance).fold(f64::MAX, f64::min);
    let max_steer_rate_deg = records
        .windows(2)
        .map(|w| (w[1].delta - w[0].delta).abs() / dt)
        .fold(0.0, f64::max)
        .to_degrees();
    Ok(Metrics {
        path_length,
        steps: records.len() - 1,
        min_clearance,
        max_steer_rate_deg,
    })
}

/// Geometric steering toward a heading error `heading_error` with lookahead
/// `lookahead`, clamped to the wheel limit.
pub fn pursuit_steer(heading_error: f64, lookahead: f64, vehicle: &VehicleParams) -> f64 {
    let l = vehicle.wheelbase;
    (2.0 * l * heading_error.sin() / lookahead.max(1e-6))
        .atan()
        .clamp(-vehicle.max_steer(), vehicle.max_steer())
}

pub fn run_episode(scenario: &Scenario, cfg: &EpisodeConfig) -> Result<EpisodeLog, SimError> {
    run(scenario, cfg, None)
}

/// Like [`run_episode`], also returning per-cycle histograms and solver
/// statistics.
pub fn run_episode_traced(
    scenario: &Scenario,
    cfg: &EpisodeConfig,
) -> Result<(EpisodeLog, EpisodeTrace), SimError> {
    let mut trace = EpisodeTrace::default();
    let log = run(scenario, cfg, Some(&mut trace))?;
    Ok((log, trace))
}

struct Decision {
    command: f64,
    beam: Option<usize>,
    heading: Option<f64>,
    objective: Option<f64>,
}

fn run(
    scenario: &Scenario,
    cfg: &EpisodeConfig,
    mut trace: Option<&mut EpisodeTrace>,
) -> Result<EpisodeLog, SimError> {
    cfg.validate()?;
    let dt = cfg.dt();
    let brake = cfg.vph.deceleration * dt;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
    let mut state = VehicleState::at_pose(scenario.start);
    let mut speed = cfg.v_r;
    let mut blocked_cycles = 0usize;
    let mut queued: VecDeque<f64> = VecDeque::new();
    let mut records = Vec::new();

    let outcome = 'episode: {
        for k in 0..=cfg.max_steps {
            let t = k as f64 * dt;
            let pose = state.pose();
            let clearance = check_collision(scenario, &pose, cfg.vehicle.radius);
            let mut scan = raycast_scan(scenario, &pose, &cfg.lidar);
            add_range_noise(&mut scan, cfg.lidar.range_noise_std, &mut rng);
            let mut record = EpisodeRecord {
                t,
                x: state.x,
                y: state.y,
                theta: state.theta,
                delta: state.steer,
                delta_cmd: state.steer,
                m: None,
                desired_heading: None,
                min_range: scan.min_range(),
                clearance,
                speed,
                objective: None,
            };

            let goal_distance = (scenario.goal - pose.position()).norm();
            let terminal = if clearance <= 0.0 {
                Some(Outcome::Collision)
            } else if goal_distance <= cfg.goal_tolerance {
                Some(Outcome::GoalReached)
            } else if k == cfg.max_steps {
                Some(Outcome::Timeout)
            } else {
                None
            };
            if let Some(outcome) = terminal {
                records.push(record);
                break 'episode outcome;
            }

            let plan = vph::plan(&scan, &pose, &scenario.goal, speed, &cfg.vph);
            if let Some(tr) = trace.as_deref_mut() {
                let h = &plan.histogram;
                tr.histograms.extend((0..scan.len()).map(|i| HistogramRow {
                    cycle: k,
                    i,
                    d_i: scan.ranges[i],
                    reach: plan.field.distances[i],
                    symbol: h.symbol[i],
                    threshold: h.threshold[i],
                    denominator: h.denominators[i],
                    cost: h.costs[i],
                }));
            }

            let decision = match plan.desired_heading(state.theta) {
                Ok(heading) => {
                    blocked_cycles = 0;
                    speed = (speed + brake).min(cfg.v_r);
                    let mut d = Decision {
                        command: 0.0,
                        beam: plan.histogram.selected,
                        heading: Some(heading),
                        objective: None,
                    };
                    match cfg.controller_mode {
                        ControllerMode::VphOnly => {
                            let lookahead = cfg.v_r * 1.0;
                            d.command = pursuit_steer(wrap_angle(heading - state.theta), lookahead, &cfg.vehicle);
                        }
                        ControllerMode::VphMpc => {
                            if let Some(cmd) = queued.pop_front() {
                                d.command = cmd;
                            } else {
                                let step = mpc_step(&state, heading, state.steer, &cfg.mpc, &cfg.vehicle, speed)
                                    .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
                                d.command = step.command;
                                d.objective = Some(step.solution.objective);
                                if cfg.mpc.apply_first_nc {
                                    let nc = cfg.mpc.control_horizon;
                                    queued.extend(step.solution.steering.iter().skip(1).take(nc - 1));
                                }
                                if let Some(tr) = trace.as_deref_mut() {
                                    let s = &step.solution;
                                    tr.mpc.push(MpcDiagnostic {
                                        cycle: k,
                                        t,
                                        objective: s.objective,
                                        iterations: s.iterations,
                                        active_constraints: s.active_constraints,
                                        delta_u1: s.increments[0],
                                        kkt_residual: s.kkt_residual,
                                        exact: s.exact,
                                    });
                                }
                            }
                        }
                    }
                    d
                }
                Err(_) => {
                    blocked_cycles += 1;
                    queued.clear();
                    if blocked_cycles > cfg.hold_cycles {
                        records.push(record);
                        break 'episode Outcome::NoFeasibleDirection;
                    }
                    // brake and let the wheel return to centre
                    speed = (speed - brake).max(0.0);
                    Decision {
                        command: 0.0,
                        beam: None,
                        heading: None,
                        objective: None,
                    }
                }
            };

            record.delta_cmd = decision.command;
            record.m = decision.beam;
            record.desired_heading = decision.heading;
            record.objective = decision.objective;
            records.push(record);
            state = step_nonlinear(&state, decision.command, speed, dt, &cfg.vehicle);
        }
        unreachable!("the last iteration always terminates");
    };

    let metrics = compute_metrics(&records, dt)?;
    Ok(EpisodeLog {
        scenario: scenario.name.clone(),
        mode: cfg.controller_mode,
        dt,
        records,
        outcome,
        metrics,
    })
}
