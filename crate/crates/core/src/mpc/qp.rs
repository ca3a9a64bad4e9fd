//! Dense convex QP with box and two-sided linear inequality constraints.
//!
//! ```text
//! minimize    ½ xᵀ H x + gᵀ x + c
//! subject to  lower ≤ x ≤ upper
//!             row_lower ≤ A x ≤ row_upper
//! ```
//!
//! Solved with a primal active-set method started from a feasible point,
//! so every iterate is feasible. Problems here are tiny (a handful of
//! variables), so each step solves the full KKT system with a dense LU.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub constant: f64,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub rows: DMatrix<f64>,
    pub row_lower: DVector<f64>,
    pub row_upper: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem `½ xᵀ H x + gᵀ x`.
    pub fn new(hessian: DMatrix<f64>, gradient: DVector<f64>) -> Self {
        let n = gradient.len();
        Self {
            hessian,
            gradient,
            constant: 0.0,
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
            rows: DMatrix::zeros(0, n),
            row_lower: DVector::zeros(0),
            row_upper: DVector::zeros(0),
        }
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_rows(mut self, rows: DMatrix<f64>, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.rows = rows;
        self.row_lower = lower;
        self.row_upper = upper;
        self
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.gradient.dot(x) + self.constant
    }

    fn check_dims(&self) -> Result<(), QpError> {
        let n = self.dim();
        let m = self.rows.nrows();
        let ok = self.hessian.shape() == (n, n)
            && self.lower.len() == n
            && self.upper.len() == n
            && self.rows.ncols() == n
            && self.row_lower.len() == m
            && self.row_upper.len() == m;
        if ok {
            Ok(())
        } else {
            Err(QpError::DimensionMismatch)
        }
    }

    /// Every bound and row as a one-sided `aᵀx ≤ b`.
    fn inequalities(&self) -> Vec<Inequality> {
        let n = self.dim();
        let mut out = Vec::new();
        for j in 0..n {
            if self.upper[j].is_finite() {
                out.push(Inequality::unit(n, j, 1.0, self.upper[j]));
            }
            if self.lower[j].is_finite() {
                out.push(Inequality::unit(n, j, -1.0, -self.lower[j]));
            }
        }
        for i in 0..self.rows.nrows() {
            let row = self.rows.row(i).transpose();
            if self.row_upper[i].is_finite() {
                out.push(Inequality {
                    normal: row.clone(),
                    bound: self.row_upper[i],
                });
            }
            if self.row_lower[i].is_finite() {
                out.push(Inequality {
                    normal: -row,
                    bound: -self.row_lower[i],
                });
            }
        }
        out
    }
}

struct Inequality {
    normal: DVector<f64>,
    bound: f64,
}

impl Inequality {
    fn unit(n: usize, j: usize, sign: f64, bound: f64) -> Self {
        let mut normal = DVector::zeros(n);
        normal[j] = sign;
        Self { normal, bound }
    }

    fn slack(&self, x: &DVector<f64>) -> f64 {
        self.bound - self.normal.dot(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub max_iterations: usize,
    /// Feasibility and multiplier-sign tolerance.
    pub tolerance: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Number of one-sided constraints in the final working set.
    pub active_constraints: usize,
    /// Max of stationarity, primal, dual and complementarity violations.
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("problem dimensions are inconsistent")]
    DimensionMismatch,
    #[error("hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("no feasible starting point at the origin or its box projection")]
    InfeasibleStart,
    #[error("singular KKT system")]
    Singular,
    #[error("iteration limit reached after {} iterations", .0.iterations)]
    MaxIterations(Box<QpSolution>),
}

fn kkt_step(
    h: &DMatrix<f64>,
    grad: &DVector<f64>,
    cons: &[Inequality],
    working: &[usize],
) -> Result<(DVector<f64>, DVector<f64>), QpError> {
    let n = grad.len();
    let w = working.len();
    let mut kkt = DMatrix::zeros(n + w, n + w);
    kkt.view_mut((0, 0), (n, n)).copy_from(h);
    for (k, &c) in working.iter().enumerate() {
        for j in 0..n {
            kkt[(n + k, j)] = cons[c].normal[j];
            kkt[(j, n + k)] = cons[c].normal[j];
        }
    }
    let mut rhs = DVector::zeros(n + w);
    rhs.rows_mut(0, n).copy_from(&(-grad));
    let sol = kkt.lu().solve(&rhs).ok_or(QpError::Singular)?;
    Ok((sol.rows(0, n).into_owned(), sol.rows(n, w).into_owned()))
}

fn finish(
    problem: &QpProblem,
    cons: &[Inequality],
    x: DVector<f64>,
    working: &[usize],
    multipliers: &DVector<f64>,
    iterations: usize,
) -> QpSolution {
    let mut stationarity = &problem.hessian * &x + &problem.gradient;
    let mut dual = 0.0f64;
    let mut comp = 0.0f64;
    for (k, &c) in working.iter().enumerate() {
        let lam = multipliers[k];
        stationarity += &cons[c].normal * lam;
        dual = dual.max(-lam);
        comp = comp.max((lam * cons[c].slack(&x)).abs());
    }
    let primal = cons
        .iter()
        .map(|c| -c.slack(&x))
        .fold(0.0f64, f64::max);
    let kkt_residual = stationarity.amax().max(primal).max(dual).max(comp);
    QpSolution {
        objective: problem.objective(&x),
        x,
        iterations,
        active_constraints: working.len(),
        kkt_residual,
    }
}

/// Minimizes the problem. On hitting the iteration limit the current
/// (feasible) iterate comes back inside [`QpError::MaxIterations`].
pub fn solve_qp(problem: &QpProblem, options: &QpOptions) -> Result<QpSolution, QpError> {
    problem.check_dims()?;
    if problem.hessian.clone().cholesky().is_none() {
        return Err(QpError::NotPositiveDefinite);
    }
    let n = problem.dim();
    let cons = problem.inequalities();
    let tol = options.tolerance;

    let mut x = DVector::zeros(n);
    if cons.iter().any(|c| c.slack(&x) < -tol) {
        x = DVector::from_fn(n, |j, _| 0f64.clamp(problem.lower[j], problem.upper[j]));
        if cons.iter().any(|c| c.slack(&x) < -tol) {
            return Err(QpError::InfeasibleStart);
        }
    }

    let mut working: Vec<usize> = Vec::new();
    let dual_scale = 1.0 + problem.gradient.amax();
    for iteration in 1..=options.max_iterations {
        let grad = &problem.hessian * &x + &problem.gradient;
        let (step, multipliers) = kkt_step(&problem.hessian, &grad, &cons, &working)?;

        if step.amax() <= 1e-12 * (1.0 + x.amax()) {
            let most_negative = multipliers
                .iter()
                .enumerate()
                .filter(|(_, &l)| l < -tol * dual_scale)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k);
            match most_negative {
                None => return Ok(finish(problem, &cons, x, &working, &multipliers, iteration)),
                Some(k) => {
                    working.remove(k);
                    continue;
                }
            }
        }

        let step_norm = step.norm();
        let mut alpha = 1.0;
        let mut blocking = None;
        for (c, con) in cons.iter().enumerate() {
            if working.contains(&c) {
                continue;
            }
            let rate = con.normal.dot(&step);
            if rate <= 1e-12 * con.normal.norm() * step_norm {
                continue;
            }
            let ratio = (con.slack(&x) / rate).max(0.0);
            if ratio < alpha {
                alpha = ratio;
                blocking = Some(c);
            }
        }
        x += step * alpha;
        if let Some(c) = blocking {
            working.push(c);
        }
    }

    // multipliers belong to the previous working set; recompute for the
    // reported residual
    let grad = &problem.hessian * &x + &problem.gradient;
    let (_, lambda) = kkt_step(&problem.hessian, &grad, &cons, &working)?;
    Err(QpError::MaxIterations(Box::new(finish(
        problem,
        &cons,
        x,
        &working,
        &lambda,
        options.max_iterations,
    ))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unconstrained_identity() {
        let g = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let p = QpProblem::new(DMatrix::identity(3, 3), g.clone());
        let s = solve_qp(&p, &QpOptions::default()).unwrap();
        assert_relative_eq!(s.x, -g, epsilon = 1e-12);
        assert!(s.kkt_residual < 1e-12);
    }

    #[test]
    fn one_dimensional_active_bound() {
        // min ½u² − 3u s.t. u ≤ 1
        let p = QpProblem::new(DMatrix::identity(1, 1), DVector::from_element(1, -3.0))
            .with_bounds(DVector::from_element(1, f64::NEG_INFINITY), DVector::from_element(1, 1.0));
        let s = solve_qp(&p, &QpOptions::default()).unwrap();
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-12);
        assert_eq!(s.active_constraints, 1);
        assert!(s.kkt_residual < 1e-12);
    }

    #[test]
    fn general_row_constraint() {
        // min (x-2)² + (y-2)² s.t. x + y ≤ 1  → (0.5, 0.5)
        let p = QpProblem::new(DMatrix::identity(2, 2) * 2.0, DVector::from_vec(vec![-4.0, -4.0]))
            .with_rows(
                DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                DVector::from_element(1, f64::NEG_INFINITY),
                DVector::from_element(1, 1.0),
            );
        let s = solve_qp(&p, &QpOptions::default()).unwrap();
        assert_relative_eq!(s.x, DVector::from_vec(vec![0.5, 0.5]), epsilon = 1e-12);
    }

    #[test]
    fn parallel_bounds_do_not_break_the_working_set() {
        // x ≤ 1 as both a box bound and a row
        let p = QpProblem::new(DMatrix::identity(1, 1), DVector::from_element(1, -5.0))
            .with_bounds(DVector::from_element(1, -1.0), DVector::from_element(1, 1.0))
            .with_rows(
                DMatrix::from_element(1, 1, 1.0),
                DVector::from_element(1, -1.0),
                DVector::from_element(1, 1.0),
            );
        let s = solve_qp(&p, &QpOptions::default()).unwrap();
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_indefinite_and_bad_dims() {
        let p = QpProblem::new(-DMatrix::identity(2, 2), DVector::zeros(2));
        assert_eq!(solve_qp(&p, &QpOptions::default()), Err(QpError::NotPositiveDefinite));
        let q = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(3));
        assert_eq!(solve_qp(&q, &QpOptions::default()), Err(QpError::DimensionMismatch));
    }

    #[test]
    fn infeasible_start_is_reported() {
        let p = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2)).with_rows(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_element(1, 3.0),
            DVector::from_element(1, 4.0),
        );
        assert_eq!(solve_qp(&p, &QpOptions::default()), Err(QpError::InfeasibleStart));
    }

    #[test]
    fn iteration_cap_returns_feasible_iterate() {
        let p = QpProblem::new(DMatrix::identity(3, 3), DVector::from_element(3, -5.0))
            .with_bounds(DVector::from_element(3, -1.0), DVector::from_element(3, 1.0));
        let opts = QpOptions {
            max_iterations: 1,
            ..QpOptions::default()
        };
        match solve_qp(&p, &opts) {
            Err(QpError::MaxIterations(best)) => {
                assert!(best.x.iter().all(|v| v.abs() <= 1.0 + 1e-12));
                assert_eq!(best.iterations, 1);
            }
            other => panic!("expected iteration cap, got {other:?}"),
        }
    }

    fn spd(n: usize, entries: &[f64]) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
        &m * m.transpose() + DMatrix::identity(n, n) * 0.5
    }

    proptest! {
        #[test]
        fn box_solution_beats_every_feasible_perturbation(
            entries in proptest::collection::vec(-2.0..2.0f64, 16),
            g in proptest::collection::vec(-5.0..5.0f64, 4),
            bound in 0.1..2.0f64,
        ) {
            let h = spd(4, &entries);
            let p = QpProblem::new(h, DVector::from_vec(g))
                .with_bounds(DVector::from_element(4, -bound), DVector::from_element(4, bound))
                .with_rows(
                    DMatrix::from_fn(4, 4, |i, j| if j <= i { 1.0 } else { 0.0 }),
                    DVector::from_element(4, -1.5 * bound),
                    DVector::from_element(4, 1.5 * bound),
                );
            let s = solve_qp(&p, &QpOptions::default()).unwrap();
            prop_assert!(s.kkt_residual < 1e-8);
            for j in 0..4 {
                for d in [-1e-3, 1e-3] {
                    let mut y = s.x.clone();
                    y[j] += d;
                    let feasible = y.iter().all(|v| v.abs() <= bound)
                        && (0..4).all(|i| y.rows(0, i + 1).sum().abs() <= 1.5 * bound);
                    if feasible {
                        prop_assert!(p.objective(&y) >= s.objective - 1e-12);
                    }
                }
            }
        }
    }
}
