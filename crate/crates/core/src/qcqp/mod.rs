//! Dense log-barrier interior-point solver for concave quadratic maximization
//! under convex quadratic inequality constraints:
//!
//! ```text
//! maximize    xᵀA₀x + 2b₀ᵀx + c₀          (-A₀ ⪰ 0)
//! subject to  xᵀAᵢx + 2bᵢᵀx + cᵢ ≤ 0      (Aᵢ ⪰ 0)
//! ```
//!
//! Each barrier stage minimizes `-t·f₀(x) - Σ log(-gᵢ(x))` with damped Newton
//! steps and a backtracking line search; `t` grows by a constant factor until
//! the duality-gap estimate `m/t` falls below the tolerance.

mod stack;

pub use stack::{
    complex_stack, complex_unstack, hermitian_to_real, orthonormal_basis, ComplexAffine,
};

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// `xᵀAx + 2bᵀx + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn zeros(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(dim, dim),
            b: DVector::zeros(dim),
            c: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let ax = &self.a * x;
        x.dot(&ax) + 2.0 * self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a * x + &self.b) * 2.0
    }

    fn is_linear(&self) -> bool {
        self.a.iter().all(|v| *v == 0.0)
    }

    /// Rough magnitude of the terms summed in `value`, used to judge rounding.
    fn term_scale(&self, x: &DVector<f64>) -> f64 {
        let ax = &self.a * x;
        x.dot(&ax).abs() + 2.0 * self.b.dot(x).abs() + self.c.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexQuadraticProgram {
    pub objective: QuadraticForm,
    pub constraints: Vec<QuadraticForm>,
    /// Feasible starting point.
    pub x0: DVector<f64>,
}

impl ConvexQuadraticProgram {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn constraint_values(&self, x: &DVector<f64>) -> Vec<f64> {
        self.constraints.iter().map(|g| g.value(x)).collect()
    }

    /// Checks dimensions and curvature: `-A₀` and every `Aᵢ` must be PSD up to
    /// `psd_tol` relative to their largest entry.
    pub fn validate(&self, psd_tol: f64) -> Result<()> {
        let n = self.dim();
        if self.objective.a.shape() != (n, n) {
            return Err(Error::dim("objective matrix", n, self.objective.a.nrows()));
        }
        if self.x0.len() != n {
            return Err(Error::dim("x0", n, self.x0.len()));
        }
        check_psd(&(-&self.objective.a), psd_tol)
            .map_err(|e| Error::NotConvex(format!("objective: {e}")))?;
        for (i, g) in self.constraints.iter().enumerate() {
            if g.dim() != n || g.a.shape() != (n, n) {
                return Err(Error::dim("constraint", n, g.dim()));
            }
            if !g.is_linear() {
                check_psd(&g.a, psd_tol)
                    .map_err(|e| Error::NotConvex(format!("constraint {i}: {e}")))?;
            }
        }
        Ok(())
    }
}

fn check_psd(a: &DMatrix<f64>, tol: f64) -> std::result::Result<(), String> {
    if a.nrows() == 0 {
        return Ok(());
    }
    let asym = (a - a.transpose()).amax();
    let scale = a.amax().max(1e-300);
    if asym > 1e-9 * scale.max(1.0) {
        return Err(format!("matrix is not symmetric (asymmetry {asym:.3e})"));
    }
    if a.amax() == 0.0 {
        return Ok(());
    }
    let shift = tol * scale.max(1.0);
    let shifted = a + DMatrix::identity(a.nrows(), a.ncols()) * shift;
    match Cholesky::new(shifted) {
        Some(_) => Ok(()),
        None => Err("matrix has a negative eigenvalue beyond tolerance".into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcqpStatus {
    Converged,
    MaxIter,
    InfeasibleStart,
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub x: DVector<f64>,
    pub objective_value: f64,
    /// `max(‖∇f₀ - Σλᵢ∇gᵢ‖ / (1 + ‖∇f₀‖), max λᵢ|gᵢ|)`.
    pub kkt_residual: f64,
    /// Newton steps taken.
    pub iterations: usize,
    pub status: QcqpStatus,
    /// Recovered multipliers `λᵢ = 1 / (t·(-gᵢ))`.
    pub multipliers: Vec<f64>,
    /// Objective value at the end of each barrier stage.
    pub stage_objectives: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    /// Target duality gap `m/t`.
    pub tol: f64,
    /// Barrier growth per stage.
    pub mu: f64,
    /// Newton step budget across all stages.
    pub max_newton: usize,
    /// Initial barrier weight; chosen from the gradients when `None`.
    pub t0: Option<f64>,
    /// Stop centering once half the squared Newton decrement is below this.
    pub centering_tol: f64,
    pub psd_tol: f64,
    pub ls_alpha: f64,
    pub ls_beta: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            mu: 10.0,
            max_newton: 200,
            t0: None,
            centering_tol: 1e-14,
            psd_tol: 1e-9,
            ls_alpha: 0.01,
            ls_beta: 0.5,
        }
    }
}

/// Solves `prob` to duality gap `tol` with default barrier settings.
pub fn solve(prob: &ConvexQuadraticProgram, tol: f64) -> Result<QcqpSolution> {
    solve_with(
        prob,
        &BarrierOptions {
            tol,
            ..BarrierOptions::default()
        },
    )
}

pub fn solve_with(prob: &ConvexQuadraticProgram, opts: &BarrierOptions) -> Result<QcqpSolution> {
    prob.validate(opts.psd_tol)?;
    let mut x = prob.x0.clone();
    let g0 = prob.constraint_values(&x);
    // values within rounding of zero count as boundary points
    let slack_floor: Vec<f64> = prob
        .constraints
        .iter()
        .map(|g| 1e-12 * (1.0 + g.term_scale(&x)))
        .collect();
    if g0
        .iter()
        .zip(&slack_floor)
        .any(|(g, floor)| !(*g <= *floor))
    {
        return Ok(infeasible(prob, x));
    }
    let mut extra_steps = 0;
    let on_boundary = g0.iter().zip(&slack_floor).any(|(&v, floor)| -v <= *floor);
    if on_boundary {
        match find_interior(prob, 1e-6, None, opts)? {
            Some((xc, steps)) => {
                extra_steps = steps;
                x = &x + (xc - &x) * 0.1;
                if prob.constraint_values(&x).iter().any(|g| !(*g < 0.0)) {
                    return Ok(infeasible(prob, prob.x0.clone()));
                }
            }
            None => return Ok(infeasible(prob, prob.x0.clone())),
        }
    }
    let mut sol = barrier(prob, x, opts)?;
    sol.iterations += extra_steps;
    Ok(sol)
}

fn infeasible(prob: &ConvexQuadraticProgram, x: DVector<f64>) -> QcqpSolution {
    QcqpSolution {
        objective_value: prob.objective.value(&x),
        x,
        kkt_residual: f64::INFINITY,
        iterations: 0,
        status: QcqpStatus::InfeasibleStart,
        multipliers: vec![0.0; prob.constraints.len()],
        stage_objectives: Vec::new(),
    }
}

struct Barrier<'a> {
    prob: &'a ConvexQuadraticProgram,
    curved: Vec<bool>,
}

impl<'a> Barrier<'a> {
    fn new(prob: &'a ConvexQuadraticProgram) -> Self {
        Self {
            curved: prob.constraints.iter().map(|g| !g.is_linear()).collect(),
            prob,
        }
    }

    /// `-t·f₀(x) - Σ log(-gᵢ(x))`, or `None` outside the strict interior.
    fn value(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        let mut phi = -t * self.prob.objective.value(x);
        for g in &self.prob.constraints {
            let v = g.value(x);
            if !(v < 0.0) {
                return None;
            }
            phi -= (-v).ln();
        }
        Some(phi)
    }

    fn grad_hess(&self, x: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let obj = &self.prob.objective;
        let mut grad = obj.gradient(x) * (-t);
        let mut hess = &obj.a * (-2.0 * t);
        for (g, &curved) in self.prob.constraints.iter().zip(&self.curved) {
            let v = g.value(x);
            let dg = g.gradient(x);
            let inv = 1.0 / (-v);
            grad.axpy(inv, &dg, 1.0);
            if curved {
                hess += &g.a * (2.0 * inv);
            }
            hess.ger(inv * inv, &dg, &dg, 1.0);
        }
        (grad, hess)
    }
}

fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = hess.nrows();
    let scale = hess.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let h = if reg > 0.0 {
            &hess + DMatrix::identity(n, n) * reg
        } else {
            hess.clone()
        };
        if let Some(chol) = Cholesky::new(h) {
            let step = -chol.solve(grad);
            if step.iter().all(|v| v.is_finite()) {
                return Some(step);
            }
        }
        reg = if reg == 0.0 {
            1e-14 * scale
        } else {
            reg * 100.0
        };
    }
    None
}

enum Centering {
    Done,
    Budget,
}

fn center(
    bar: &Barrier<'_>,
    x: &mut DVector<f64>,
    t: f64,
    opts: &BarrierOptions,
    steps: &mut usize,
) -> Centering {
    let mut phi = match bar.value(x, t) {
        Some(p) => p,
        None => return Centering::Done,
    };
    loop {
        if *steps >= opts.max_newton {
            return Centering::Budget;
        }
        let (grad, hess) = bar.grad_hess(x, t);
        let Some(dx) = newton_direction(hess, &grad) else {
            return Centering::Done;
        };
        *steps += 1;
        let slope = grad.dot(&dx);
        let decrement = -slope;
        if !(decrement > 0.0) || decrement / 2.0 <= opts.centering_tol {
            return Centering::Done;
        }
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            let trial = &*x + &dx * s;
            if let Some(p) = bar.value(&trial, t) {
                if p <= phi + opts.ls_alpha * s * slope {
                    accepted = p < phi;
                    *x = trial;
                    phi = p;
                    break;
                }
            }
            s *= opts.ls_beta;
        }
        if !accepted {
            // rounding floor: the barrier value no longer decreases
            // representably, so a full step is judged by the gradient instead
            let trial = &*x + &dx;
            let near_floor = bar
                .value(&trial, t)
                .is_some_and(|p| p - phi <= 1e-12 * (1.0 + phi.abs()));
            if near_floor && bar.grad_hess(&trial, t).0.norm() <= 0.5 * grad.norm() {
                phi = bar.value(&trial, t).unwrap_or(phi);
                *x = trial;
                continue;
            }
            return Centering::Done;
        }
    }
}

fn initial_weight(bar: &Barrier<'_>, x: &DVector<f64>, m: usize, tol: f64) -> f64 {
    let (grad_barrier, _) = bar.grad_hess(x, 0.0);
    let grad_obj = -bar.prob.objective.gradient(x);
    let denom = grad_obj.norm_squared();
    let t = if denom > 0.0 {
        -grad_obj.dot(&grad_barrier) / denom
    } else {
        1.0
    };
    let upper = m as f64 / tol;
    if t.is_finite() && t > 0.0 {
        t.clamp(1e-8_f64.min(upper), upper)
    } else {
        1.0_f64.min(upper)
    }
}

fn barrier(
    prob: &ConvexQuadraticProgram,
    mut x: DVector<f64>,
    opts: &BarrierOptions,
) -> Result<QcqpSolution> {
    let bar = Barrier::new(prob);
    let m = prob.constraints.len();
    let mut steps = 0;
    let mut stage_objectives = Vec::new();

    if m == 0 {
        let status = match center(&bar, &mut x, 1.0, opts, &mut steps) {
            Centering::Done => QcqpStatus::Converged,
            Centering::Budget => QcqpStatus::MaxIter,
        };
        let value = prob.objective.value(&x);
        stage_objectives.push(value);
        let grad = prob.objective.gradient(&x);
        let kkt = grad.norm() / (1.0 + grad.norm());
        return Ok(QcqpSolution {
            x,
            objective_value: value,
            kkt_residual: kkt,
            iterations: steps,
            status,
            multipliers: Vec::new(),
            stage_objectives,
        });
    }

    // the last stage overshoots the gap target `m/t ≤ tol` so that the
    // complementarity products `1/t` stay clear of the tolerance after rounding
    let t_final = 4.0 * m as f64 / opts.tol;
    let mut t = opts
        .t0
        .unwrap_or_else(|| initial_weight(&bar, &x, m, opts.tol))
        .min(t_final);
    let mut status = QcqpStatus::Converged;
    loop {
        if let Centering::Budget = center(&bar, &mut x, t, opts, &mut steps) {
            status = QcqpStatus::MaxIter;
            stage_objectives.push(prob.objective.value(&x));
            break;
        }
        stage_objectives.push(prob.objective.value(&x));
        if t >= t_final {
            break;
        }
        t = (t * opts.mu).min(t_final);
    }

    let (kkt, multipliers) = kkt_residual(prob, &x, t);
    if status == QcqpStatus::Converged && kkt > opts.tol {
        status = QcqpStatus::MaxIter;
    }
    Ok(QcqpSolution {
        objective_value: prob.objective.value(&x),
        x,
        kkt_residual: kkt,
        iterations: steps,
        status,
        multipliers,
        stage_objectives,
    })
}

/// KKT residual `max(‖∇f₀ - Σλᵢ∇gᵢ‖ / (1 + ‖∇f₀‖), maxᵢ λᵢ|gᵢ|)` with the
/// better of two multiplier estimates: the barrier duals `1/(t·(-gᵢ))`, and a
/// nonnegative least-squares fit of the stationarity condition. The second is
/// immune to the cancellation in `gᵢ` that spoils the first at large `t`.
fn kkt_residual(prob: &ConvexQuadraticProgram, x: &DVector<f64>, t: f64) -> (f64, Vec<f64>) {
    let grad = prob.objective.gradient(x);
    let values: Vec<f64> = prob.constraints.iter().map(|g| g.value(x)).collect();
    let grads: Vec<DVector<f64>> = prob.constraints.iter().map(|g| g.gradient(x)).collect();
    let residual = |lambda: &[f64]| {
        let mut stationarity = grad.clone();
        let mut complementarity: f64 = 0.0;
        for ((l, dg), v) in lambda.iter().zip(&grads).zip(&values) {
            stationarity.axpy(-l, dg, 1.0);
            complementarity = complementarity.max(l * v.abs());
        }
        (stationarity.norm() / (1.0 + grad.norm())).max(complementarity)
    };
    let barrier_duals: Vec<f64> = values.iter().map(|v| 1.0 / (t * (-v))).collect();
    let fitted = nnls(&grads, &grad);
    let (r_barrier, r_fitted) = (residual(&barrier_duals), residual(&fitted));
    if r_fitted < r_barrier {
        (r_fitted, fitted)
    } else {
        (r_barrier, barrier_duals)
    }
}

/// Lawson-Hanson nonnegative least squares: `min ‖Σ λᵢ colsᵢ - target‖`, `λ ≥ 0`.
fn nnls(cols: &[DVector<f64>], target: &DVector<f64>) -> Vec<f64> {
    let m = cols.len();
    let mut lambda = vec![0.0; m];
    if m == 0 {
        return lambda;
    }
    let scale = cols
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let tol = 1e-14 * scale * (1.0 + target.norm());
    let mut passive = vec![false; m];
    let solve_passive = |passive: &[bool]| -> Vec<f64> {
        let idx: Vec<usize> = (0..m).filter(|&i| passive[i]).collect();
        let mut z = vec![0.0; m];
        if idx.is_empty() {
            return z;
        }
        let a = DMatrix::from_columns(&idx.iter().map(|&i| cols[i].clone()).collect::<Vec<_>>());
        let ata = a.tr_mul(&a);
        let atb = a.tr_mul(target);
        let sol = Cholesky::new(ata.clone())
            .map(|c| c.solve(&atb))
            .or_else(|| ata.clone().svd(true, true).solve(&atb, 1e-14).ok());
        if let Some(sol) = sol {
            for (k, &i) in idx.iter().enumerate() {
                z[i] = sol[k];
            }
        }
        z
    };
    for _ in 0..3 * m + 10 {
        let mut r = target.clone();
        for (l, c) in lambda.iter().zip(cols) {
            r.axpy(-l, c, 1.0);
        }
        let w: Vec<f64> = cols.iter().map(|c| c.dot(&r)).collect();
        let candidate = (0..m)
            .filter(|&i| !passive[i] && w[i] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..m).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                lambda = z;
                break;
            }
            let mut step: f64 = 1.0;
            for i in (0..m).filter(|&i| passive[i] && z[i] <= 0.0) {
                step = step.min(lambda[i] / (lambda[i] - z[i]));
            }
            for i in 0..m {
                lambda[i] += step * (z[i] - lambda[i]);
                if passive[i] && lambda[i] <= 1e-300 {
                    passive[i] = false;
                    lambda[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    lambda
}

/// Looks for a point whose normalized slacks `-gᵢ(x)/scaleᵢ` are all at least
/// `margin`, by minimizing the largest normalized constraint value starting
/// from `prob.x0` (which need not be feasible). Returns the point and the
/// Newton steps spent, or `None` when the constraints admit no strictly
/// feasible point.
pub fn find_interior(
    prob: &ConvexQuadraticProgram,
    margin: f64,
    scales: Option<&[f64]>,
    opts: &BarrierOptions,
) -> Result<Option<(DVector<f64>, usize)>> {
    let (x, worst, steps) = minimize_max_violation(prob, margin, scales, opts)?;
    let strictly = prob.constraints.iter().all(|g| g.value(&x) < 0.0);
    Ok(if worst < 0.0 && strictly {
        Some((x, steps))
    } else {
        None
    })
}

/// Minimizes `maxᵢ gᵢ(x)/scaleᵢ` down to `-margin` from `prob.x0`. Returns the
/// minimizer, the largest normalized constraint value there and the Newton
/// steps spent.
pub fn minimize_max_violation(
    prob: &ConvexQuadraticProgram,
    margin: f64,
    scales: Option<&[f64]>,
    opts: &BarrierOptions,
) -> Result<(DVector<f64>, f64, usize)> {
    let n = prob.dim();
    let m = prob.constraints.len();
    let x0 = &prob.x0;
    if m == 0 {
        return Ok((x0.clone(), f64::NEG_INFINITY, 0));
    }
    let scales: Vec<f64> = match scales {
        Some(s) if s.len() == m => s.to_vec(),
        Some(s) => return Err(Error::dim("find_interior scales", m, s.len())),
        None => vec![1.0; m],
    };
    let worst_at = |x: &DVector<f64>| {
        prob.constraints
            .iter()
            .zip(&scales)
            .map(|(g, s)| g.value(x) / s)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let worst = worst_at(x0);
    if worst <= -margin {
        return Ok((x0.clone(), worst, 0));
    }

    // variables (x, s): minimize s  s.t.  gᵢ(x)/scaleᵢ - s ≤ 0,  -s - margin ≤ 0
    let mut objective = QuadraticForm::zeros(n + 1);
    objective.b[n] = -0.5;
    let mut constraints = Vec::with_capacity(m + 1);
    for (g, s) in prob.constraints.iter().zip(&scales) {
        let mut form = QuadraticForm::zeros(n + 1);
        form.a.view_mut((0, 0), (n, n)).copy_from(&(&g.a / *s));
        form.b.rows_mut(0, n).copy_from(&(&g.b / *s));
        form.b[n] = -0.5;
        form.c = g.c / s;
        constraints.push(form);
    }
    let mut floor = QuadraticForm::zeros(n + 1);
    floor.b[n] = -0.5;
    floor.c = -margin;
    constraints.push(floor);

    let mut z0 = DVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(x0);
    z0[n] = worst + 1.0 + worst.abs();
    let aug = ConvexQuadraticProgram {
        objective,
        constraints,
        x0: z0,
    };
    let phase_opts = BarrierOptions {
        tol: (0.1 * margin).max(1e-12),
        t0: None,
        ..opts.clone()
    };
    let sol = barrier(&aug, aug.x0.clone(), &phase_opts)?;
    let x = sol.x.rows(0, n).into_owned();
    let reached = worst_at(&x);
    Ok(if reached <= worst {
        (x, reached, sol.iterations)
    } else {
        (x0.clone(), worst, sol.iterations)
    })
}
