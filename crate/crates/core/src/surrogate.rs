//! Assembly of the convex surrogate programs shared by the beamformer and
//! reflection blocks.
//!
//! Both blocks see the link amplitudes `z[k][i] = h_k w_i` as complex affine
//! functions of a real decision vector. The objective is the reformulated
//! `f_A` (bits) written in those amplitudes, and the SINR and harvesting
//! constraints are convexified by replacing every `|z|²` on the favorable side
//! with its tangent at the expansion point.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use crate::fp::AuxVars;
use crate::model::{SystemConfig, C64};
use crate::qcqp::{orthonormal_basis, ComplexAffine, ConvexQuadraticProgram, QuadraticForm};

/// Which true constraint a surrogate row stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintTag {
    /// Minimum SINR of user `k`.
    Sinr(usize),
    /// Minimum harvested power of user `k`.
    Harvest(usize),
    /// Total transmit power.
    Power,
}

/// A convex surrogate program together with the meaning of each constraint.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub program: ConvexQuadraticProgram,
    pub tags: Vec<ConstraintTag>,
}

impl Subproblem {
    /// Largest constraint value at the start point (`<= 0` when feasible).
    pub fn worst_start_violation(&self) -> Option<(ConstraintTag, f64)> {
        self.program
            .constraint_values(&self.program.x0)
            .into_iter()
            .zip(&self.tags)
            .map(|(v, t)| (*t, v))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Quadratic term on the decision vector that does not go through the links.
pub(crate) enum NormTerm {
    /// `‖x‖² ≤ budget`.
    PowerBall(f64),
    /// `-weight·‖x - center‖²` added to the objective.
    Penalty { weight: f64, center: DVector<f64> },
}

/// Link amplitudes as affine maps of the decision vector.
pub(crate) struct LinkMaps {
    pub z: Vec<Vec<ComplexAffine>>,
}

impl LinkMaps {
    pub fn users(&self) -> usize {
        self.z.len()
    }

    pub fn dim(&self) -> usize {
        self.z
            .first()
            .and_then(|row| row.first())
            .map_or(0, |a| a.dim())
    }

    pub fn values(&self, x: &DVector<f64>) -> Vec<Vec<C64>> {
        self.z
            .iter()
            .map(|row| row.iter().map(|a| a.eval(x)).collect())
            .collect()
    }

    /// Orthonormal basis of every direction that moves some link amplitude.
    pub fn active_basis(&self) -> DMatrix<f64> {
        let mut dirs = Vec::with_capacity(2 * self.users() * self.users());
        for row in &self.z {
            for a in row {
                dirs.push(a.real_part());
                dirs.push(a.imag_part());
            }
        }
        orthonormal_basis(&dirs, self.dim(), 1e-12)
    }

    pub fn restrict(&self, base: &DVector<f64>, basis: &DMatrix<f64>) -> LinkMaps {
        LinkMaps {
            z: self
                .z
                .iter()
                .map(|row| row.iter().map(|a| a.restrict(base, basis)).collect())
                .collect(),
        }
    }
}

/// `f_A` in bits as a quadratic form of the decision vector.
pub(crate) fn fa_form(
    cfg: &SystemConfig,
    maps: &LinkMaps,
    rho: &[f64],
    aux: &AuxVars,
) -> QuadraticForm {
    let dim = maps.dim();
    let lam = cfg.lambda_bar;
    let eta_bar = cfg.eta_bar();
    let mut form = QuadraticForm::zeros(dim);
    for k in 0..maps.users() {
        let p = rho[k];
        let (ai, ae) = (aux.alpha_i[k], aux.alpha_e[k]);
        let bi = aux.beta_i[k];
        let be_energy: f64 = aux.beta_e[k].iter().map(|b| b.norm_sqr()).sum();
        form.c += ((1.0 + ai).ln() + lam * (1.0 + ae).ln() - (ai + lam * ae)) / LN_2;
        form.c -=
            (bi.norm_sqr() * (p * cfg.sigma2 + cfg.delta2) + lam * be_energy * cfg.sigma2) / LN_2;

        let id_gain = 2.0 * (p * (1.0 + ai)).sqrt() / LN_2;
        if id_gain != 0.0 && bi != C64::new(0.0, 0.0) {
            maps.z[k][k].add_re_scaled(&mut form, bi.conj(), id_gain);
        }
        let eh_gain = 2.0 * lam * (eta_bar * (1.0 - p) * (1.0 + ae)).sqrt() / LN_2;
        let curvature = -(bi.norm_sqr() * p + lam * be_energy * eta_bar * (1.0 - p)) / LN_2;
        for (i, z) in maps.z[k].iter().enumerate() {
            let be = aux.beta_e[k][i];
            if eh_gain != 0.0 && be != C64::new(0.0, 0.0) {
                z.add_re_scaled(&mut form, be.conj(), eh_gain);
            }
            if curvature != 0.0 {
                z.add_abs_sq(&mut form, curvature);
            }
        }
    }
    symmetrize(&mut form.a);
    form
}

/// `γ(Σ_{i≠k}|z_ki|² + σ² + δ²/ρ_k) - tangent(|z_kk|²)`.
pub(crate) fn sinr_form(
    cfg: &SystemConfig,
    maps: &LinkMaps,
    z_t: &[Vec<C64>],
    rho: &[f64],
    k: usize,
) -> QuadraticForm {
    let mut form = QuadraticForm::zeros(maps.dim());
    let gamma = cfg.gamma_min;
    for (i, z) in maps.z[k].iter().enumerate() {
        if i != k {
            z.add_abs_sq(&mut form, gamma);
        }
    }
    form.c += gamma * (cfg.sigma2 + cfg.delta2 / rho[k]);
    maps.z[k][k].add_linearized_abs_sq(&mut form, z_t[k][k], -1.0);
    symmetrize(&mut form.a);
    form
}

/// `P_min - η(1-ρ_k) Σ_i tangent(|z_ki|²)`.
pub(crate) fn harvest_form(
    cfg: &SystemConfig,
    maps: &LinkMaps,
    z_t: &[Vec<C64>],
    rho: &[f64],
    k: usize,
) -> QuadraticForm {
    let mut form = QuadraticForm::zeros(maps.dim());
    form.c += cfg.p_min;
    let gain = cfg.eta * (1.0 - rho[k]);
    for (z, zt) in maps.z[k].iter().zip(&z_t[k]) {
        z.add_linearized_abs_sq(&mut form, *zt, -gain);
    }
    form
}

/// Natural magnitude of each constraint, used to normalize slacks.
pub(crate) fn constraint_scale(cfg: &SystemConfig, rho: &[f64], tag: ConstraintTag) -> f64 {
    match tag {
        ConstraintTag::Sinr(k) => cfg.gamma_min * (cfg.sigma2 + cfg.delta2 / rho[k]),
        ConstraintTag::Harvest(_) => cfg.p_min,
        ConstraintTag::Power => cfg.p_t,
    }
}

pub(crate) fn assemble(
    cfg: &SystemConfig,
    maps: &LinkMaps,
    x0: DVector<f64>,
    rho: &[f64],
    aux: &AuxVars,
    norm: &NormTerm,
) -> Subproblem {
    let dim = maps.dim();
    let z_t = maps.values(&x0);
    let mut objective = fa_form(cfg, maps, rho, aux);
    let mut constraints = Vec::new();
    let mut tags = Vec::new();
    if cfg.gamma_min > 0.0 {
        for k in 0..maps.users() {
            constraints.push(sinr_form(cfg, maps, &z_t, rho, k));
            tags.push(ConstraintTag::Sinr(k));
        }
    }
    if cfg.p_min > 0.0 {
        for k in 0..maps.users() {
            constraints.push(harvest_form(cfg, maps, &z_t, rho, k));
            tags.push(ConstraintTag::Harvest(k));
        }
    }
    match norm {
        NormTerm::PowerBall(budget) => {
            let mut ball = QuadraticForm::zeros(dim);
            ball.a.fill_diagonal(1.0);
            ball.c = -budget;
            constraints.push(ball);
            tags.push(ConstraintTag::Power);
        }
        NormTerm::Penalty { weight, center } => {
            for i in 0..dim {
                objective.a[(i, i)] -= weight;
            }
            objective.b.axpy(*weight, center, 1.0);
            objective.c -= weight * center.norm_squared();
        }
    }
    Subproblem {
        program: ConvexQuadraticProgram {
            objective,
            constraints,
            x0,
        },
        tags,
    }
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
