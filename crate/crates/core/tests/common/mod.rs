//! Independent reference implementations shared by the integration tests
//! and the acceptance harness.

#![allow(dead_code)]

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use vphmpc::mpc::MpcConfig;
use vphmpc::vph::{Block, VphParams};

/// Random 181-beam scan built from runs of near-constant range, with
/// stretches of no return.
pub fn random_scan_ranges(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut d = Vec::with_capacity(181);
    while d.len() < 181 {
        let run = rng.gen_range(1..25);
        let kind = rng.gen_range(0..4);
        let base = match kind {
            0 => 80.0,
            1 => rng.gen_range(0.6..3.0),
            2 => rng.gen_range(3.0..12.0),
            _ => rng.gen_range(12.0..79.0),
        };
        let slope = rng.gen_range(-0.2..0.2);
        for k in 0..run {
            if d.len() == 181 {
                break;
            }
            let v: f64 = if base >= 80.0 {
                80.0
            } else {
                base + slope * k as f64 + rng.gen_range(-0.05..0.05)
            };
            d.push(v.clamp(0.55, 80.0));
        }
    }
    d
}

/// Reachable distance along each beam: every scan point is grown into a disc
/// of radius `R`; a beam crossing a disc ahead of the sensor is stopped at
/// the middle of its chord, unless that lies past the beam's own return.
pub fn modify_oracle(ranges: &[f64], res: f64, params: &VphParams) -> Vec<f64> {
    let dirs: Vec<Vector2<f64>> = (0..ranges.len())
        .map(|k| Vector2::new((k as f64 * res).cos(), (k as f64 * res).sin()))
        .collect();
    let points: Vec<Vector2<f64>> = dirs.iter().zip(ranges).map(|(u, &dj)| u * dj).collect();
    (0..ranges.len())
        .map(|i| {
            let u = dirs[i];
            let mut best = ranges[i];
            for c in &points {
                // |t u - c|² = R²  ⇒  t² - 2 t (u·c) + |c|² - R² = 0
                let b = u.dot(c);
                let disc = b * b - c.norm_squared() + params.robot_radius * params.robot_radius;
                if disc < 0.0 || b <= 1e-9 {
                    continue;
                }
                let mid = b;
                if mid <= ranges[i] {
                    best = best.min(mid);
                }
            }
            (best - params.clearance_deduction).max(0.0)
        })
        .collect()
}

pub fn random_field(rng: &mut ChaCha8Rng, window: f64) -> Vec<f64> {
    let mut d = Vec::with_capacity(181);
    while d.len() < 181 {
        let run = rng.gen_range(1..20);
        let inside = rng.gen_bool(0.7);
        let base = if inside {
            rng.gen_range(0.0..window)
        } else {
            rng.gen_range(window..80.0)
        };
        let step = rng.gen_range(-0.3..0.3);
        for k in 0..run {
            if d.len() == 181 {
                break;
            }
            let jitter = if rng.gen_bool(0.15) { rng.gen_range(-1.5..1.5) } else { 0.0 };
            d.push((base + step * k as f64 + jitter).clamp(0.0, 79.5));
        }
    }
    d
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

fn components(parent: &mut [usize], members: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for &m in members {
        let r = find(parent, m);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(m),
            None => groups.push((r, vec![m])),
        }
    }
    let mut out: Vec<Vec<usize>> = groups.into_iter().map(|(_, g)| g).collect();
    out.sort();
    out
}

fn cartesian(d: &[f64], res: f64, i: usize) -> Vector2<f64> {
    Vector2::new(d[i] * (i as f64 * res).cos(), d[i] * (i as f64 * res).sin())
}

/// Clusters, then merges, by connected components over explicit pair lists.
pub fn blocks_oracle(d: &[f64], res: f64, params: &VphParams) -> Vec<(usize, usize)> {
    let thr = params.robot_radius + 2.0 * params.puff;
    let n = d.len();
    let inside: Vec<usize> = (0..n).filter(|&i| d[i] < params.window_radius).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for &i in &inside {
        for &j in &inside {
            if j == i + 1 {
                let gap = (cartesian(d, res, i) - cartesian(d, res, j)).norm();
                if gap <= thr + 1e-12 {
                    union(&mut parent, i, j);
                }
            }
        }
    }
    let mut blocks: Vec<(usize, usize)> = components(&mut parent, &inside)
        .into_iter()
        .map(|g| (g[0], *g.last().unwrap()))
        .collect();

    loop {
        let k = blocks.len();
        let mut parent: Vec<usize> = (0..k).collect();
        for a in 0..k {
            for b in 0..k {
                if b > a && b - a <= 2 {
                    let gap = (cartesian(d, res, blocks[b].0) - cartesian(d, res, blocks[a].1)).norm();
                    if gap < thr {
                        for x in a..b {
                            union(&mut parent, x, x + 1);
                        }
                    }
                }
            }
        }
        let ids: Vec<usize> = (0..k).collect();
        let merged: Vec<(usize, usize)> = components(&mut parent, &ids)
            .into_iter()
            .map(|g| (blocks[g[0]].0, blocks[*g.last().unwrap()].1))
            .collect();
        if merged.len() == blocks.len() {
            return merged;
        }
        blocks = merged;
    }
}

pub fn as_pairs(blocks: &[Block]) -> Vec<(usize, usize)> {
    blocks.iter().map(|b| (b.start, b.end)).collect()
}

/// Six obstacle groups labelled E, F, A, B, C, D in increasing beam order;
/// F and B have both ends nearer than the facing ends of their neighbours.
pub fn six_block_field() -> (Vec<f64>, [char; 6]) {
    let spans = [(5, 15), (35, 45), (65, 75), (95, 105), (125, 135), (155, 165)];
    let ranges = [5.0, 2.0, 6.0, 3.0, 5.0, 6.5];
    let mut d = vec![80.0; 181];
    for (&(s, e), &r) in spans.iter().zip(&ranges) {
        d[s..=e].iter_mut().for_each(|x| *x = r);
    }
    (d, ['E', 'F', 'A', 'B', 'C', 'D'])
}

/// Continuous-time kinematic bicycle, stepped with forward Euler.
pub fn euler_bicycle(p: Vector3<f64>, steer: f64, v: f64, dt: f64, wheelbase: f64) -> Vector3<f64> {
    p + Vector3::new(v * p.z.cos(), v * p.z.sin(), v * steer.tan() / wheelbase) * dt
}

/// Error dynamics about a straight reference, written out by hand.
pub fn error_model(theta: f64, v: f64, dt: f64, wheelbase: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let a = Matrix3::new(
        1.0, 0.0, -v * theta.sin() * dt,
        0.0, 1.0, v * theta.cos() * dt,
        0.0, 0.0, 1.0,
    );
    (a, Vector3::new(0.0, 0.0, v * dt / wheelbase))
}

/// Tracking cost of an increment sequence by forward simulation of the
/// error model, with the steering held after the control horizon.
pub fn mpc_cost(
    cfg: &MpcConfig,
    a: &Matrix3<f64>,
    b: &Vector3<f64>,
    e0: Vector3<f64>,
    steer_prev: f64,
    du: &[f64],
) -> f64 {
    let am: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| a[(r, c)]));
    let bm = [b.x, b.y, b.z];
    let q = cfg.state_weights;
    let mut e = [e0.x, e0.y, e0.z];
    let mut u = steer_prev;
    let mut cost = 0.0;
    for k in 0..cfg.prediction_horizon {
        if k < du.len() {
            u += du[k];
            cost += cfg.increment_weight * du[k] * du[k];
        }
        e = std::array::from_fn(|r| am[r][0] * e[0] + am[r][1] * e[1] + am[r][2] * e[2] + bm[r] * u);
        cost += q[0] * e[0] * e[0] + q[1] * e[1] * e[1] + q[2] * e[2] * e[2] + cfg.input_weight * u * u;
    }
    cost
}

/// Best cost over increments on a grid of `step` radians, inside the
/// increment and angle limits.
pub fn grid_search(
    cfg: &MpcConfig,
    a: &Matrix3<f64>,
    b: &Vector3<f64>,
    e0: Vector3<f64>,
    steer_prev: f64,
    max_inc: f64,
    max_angle: f64,
    step: f64,
) -> (f64, Vec<f64>) {
    let n = (max_inc / step + 1e-9).floor() as i64;
    let values: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
    let nc = cfg.control_horizon;
    let mut best = (f64::INFINITY, vec![0.0; nc]);
    let mut idx = vec![0usize; nc];
    loop {
        let du: Vec<f64> = idx.iter().map(|&k| values[k]).collect();
        let mut u = steer_prev;
        let feasible = du.iter().all(|d| {
            u += d;
            u.abs() <= max_angle + 1e-12
        });
        if feasible {
            let c = mpc_cost(cfg, a, b, e0, steer_prev, &du);
            if c < best.0 {
                best = (c, du);
            }
        }
        let mut pos = 0;
        loop {
            if pos == nc {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
