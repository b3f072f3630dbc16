//! Successive convex approximation of the beamformer block.
//!
//! The beamformers are stacked as `x = [Re w_1 … Re w_K; Im w_1 … Im w_K]`.
//! The objective is the reformulated `f_A`, which is already concave in `x`.
//! The SINR and harvesting constraints are convexified around the current
//! beamformers, and the power budget is kept as a ball.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fp::{f_a_from_links, AuxVars};
use crate::model::{effective_channels, CVector, ChannelSet, Links, Solution, SystemConfig, C64};
use crate::qcqp::{
    self, complex_stack, complex_unstack, BarrierOptions, ComplexAffine, QcqpStatus,
};
use crate::surrogate::{assemble, LinkMaps, NormTerm};

pub use crate::surrogate::{ConstraintTag, Subproblem};

#[derive(Debug, Clone)]
pub struct ScaOptions {
    /// Stop once the relative objective gain of one iteration falls below this.
    pub tol: f64,
    /// Maximum number of surrogate solves.
    pub cap: usize,
    pub barrier: BarrierOptions,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            cap: 10,
            barrier: BarrierOptions::default(),
        }
    }
}

/// Why an SCA run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaStop {
    /// Relative gain below tolerance.
    Converged,
    /// Iteration cap reached.
    Cap,
    /// The surrogate optimum did not improve the true objective or broke a
    /// true constraint, so the previous iterate was kept.
    NoProgress,
    /// The surrogate solver could not start from the expansion point.
    SolverStart,
}

#[derive(Debug, Clone)]
pub struct ScaTrace {
    /// Objective at the start and after every accepted iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub newton_steps: usize,
    pub stop: ScaStop,
}

/// `z[k][i] = h_k w_i` as affine functions of the stacked beamformers.
pub(crate) fn w_maps(h_eff: &[CVector], m: usize) -> LinkMaps {
    let k_users = h_eff.len();
    let total = m * k_users;
    let z = h_eff
        .iter()
        .map(|h| {
            (0..k_users)
                .map(|i| {
                    let mut coeffs = CVector::zeros(2 * total);
                    for (col, &hm) in h.iter().enumerate() {
                        coeffs[i * m + col] = hm;
                        coeffs[total + i * m + col] = hm * C64::new(0.0, 1.0);
                    }
                    ComplexAffine {
                        constant: C64::new(0.0, 0.0),
                        coeffs,
                    }
                })
                .collect()
        })
        .collect();
    LinkMaps { z }
}

/// Largest normalized violation of the true SINR, harvesting and power
/// constraints at the given links (`<= 0` when feasible).
pub(crate) fn link_violation(cfg: &SystemConfig, links: &Links, rho: &[f64], power: f64) -> f64 {
    let mut worst = (power - cfg.p_t) / cfg.p_t;
    if cfg.gamma_min > 0.0 {
        for (s, _) in links.sinr(cfg, rho).iter().zip(rho) {
            worst = worst.max((cfg.gamma_min - s) / cfg.gamma_min);
        }
    }
    if cfg.p_min > 0.0 {
        for p in links.harvested(cfg, rho) {
            worst = worst.max((cfg.p_min - p) / cfg.p_min);
        }
    }
    worst
}

/// Largest violation of the true constraints written in the difference form
/// of the surrogates (`γ(I + σ² + δ²/ρ) - S` for SINR), each divided by its
/// natural scale. Same sign as [`link_violation`]; this is the quantity the
/// phase-I restoration step decreases.
pub(crate) fn form_violation(cfg: &SystemConfig, links: &Links, rho: &[f64], power: f64) -> f64 {
    let mut worst = (power - cfg.p_t) / cfg.p_t;
    if cfg.gamma_min > 0.0 {
        for (k, r) in rho.iter().enumerate() {
            let floor = cfg.sigma2 + cfg.delta2 / r;
            let need = cfg.gamma_min * (links.interference(k) + floor);
            worst = worst.max((need - links.signal(k)) / (cfg.gamma_min * floor));
        }
    }
    if cfg.p_min > 0.0 {
        for p in links.harvested(cfg, rho) {
            worst = worst.max((cfg.p_min - p) / cfg.p_min);
        }
    }
    worst
}

/// Relative rounding allowance when auditing true constraints after a
/// surrogate step.
pub(crate) const AUDIT_SLACK: f64 = 1e-12;

/// Rejects expansion points that violate a surrogate constraint beyond
/// rounding; the surrogate equals the true constraint there.
pub(crate) fn check_start(sub: &Subproblem) -> Result<()> {
    let values = sub.program.constraint_values(&sub.program.x0);
    for ((v, g), tag) in values.iter().zip(&sub.program.constraints).zip(&sub.tags) {
        if *v > 1e-12 * (1.0 + g.c.abs()) {
            return Err(Error::InfeasibleExpansion {
                constraint: format!("{tag:?}"),
                violation: *v,
            });
        }
    }
    Ok(())
}

/// Surrogate program for the beamformers over the full stacked vector,
/// expanded at `sol.w`.
pub fn build_w_subproblem(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
) -> Result<Subproblem> {
    sol.check(cfg)?;
    sol.check_split()?;
    channels.check(cfg)?;
    let h_eff = effective_channels(channels, &sol.v)?;
    let maps = w_maps(&h_eff, cfg.m);
    let sub = assemble(
        cfg,
        &maps,
        complex_stack(&sol.w),
        &sol.rho,
        aux,
        &NormTerm::PowerBall(cfg.p_t),
    );
    check_start(&sub)?;
    Ok(sub)
}

/// Runs the beamformer SCA loop from `sol.w`. The returned beamformers never
/// lower `f_A` and keep the true constraints satisfied.
pub fn update_w(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
    opts: &ScaOptions,
) -> Result<(Vec<CVector>, ScaTrace)> {
    sol.check(cfg)?;
    sol.check_split()?;
    channels.check(cfg)?;
    let h_eff = effective_channels(channels, &sol.v)?;
    let lengths = vec![cfg.m; cfg.k];
    let full = w_maps(&h_eff, cfg.m);
    let basis = full.active_basis();
    let reduced = full.restrict(&DVector::zeros(full.dim()), &basis);

    let mut w = sol.w.clone();
    let mut f_cur = f_a_from_links(cfg, &Links::new(&h_eff, &w), &sol.rho, aux);
    let mut trace = ScaTrace {
        objective: vec![f_cur],
        iterations: 0,
        newton_steps: 0,
        stop: ScaStop::Cap,
    };
    for iter in 0..opts.cap {
        let y0 = basis.tr_mul(&complex_stack(&w));
        let sub = assemble(
            cfg,
            &reduced,
            y0,
            &sol.rho,
            aux,
            &NormTerm::PowerBall(cfg.p_t),
        );
        if iter == 0 {
            check_start(&sub)?;
        }
        let out = qcqp::solve_with(&sub.program, &opts.barrier)?;
        trace.iterations += 1;
        trace.newton_steps += out.iterations;
        if out.status == QcqpStatus::InfeasibleStart {
            trace.stop = ScaStop::SolverStart;
            break;
        }
        let candidate = complex_unstack(&(&basis * &out.x), &lengths);
        let links = Links::new(&h_eff, &candidate);
        let power: f64 = candidate.iter().map(|v| v.norm_squared()).sum();
        let f_new = f_a_from_links(cfg, &links, &sol.rho, aux);
        if link_violation(cfg, &links, &sol.rho, power) > AUDIT_SLACK || !(f_new >= f_cur) {
            trace.stop = ScaStop::NoProgress;
            break;
        }
        let gain = (f_new - f_cur) / f_cur.abs().max(1e-300);
        w = candidate;
        f_cur = f_new;
        trace.objective.push(f_cur);
        if gain < opts.tol {
            trace.stop = ScaStop::Converged;
            break;
        }
    }
    Ok((w, trace))
}
