//! Reflection block: the phase-dependent amplitude model, the penalized SCA
//! update of the reflection vector and the per-element phase search.
//!
//! The reflection vector is stacked as `x = [Re v; Im v]`. Its block
//! objective is `f_A - Γ·Σ_n |v_n - f(θ_n) e^{jθ_n}|²`, which stays concave,
//! and only the SINR and harvesting surrogates constrain it.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::beamforming::{check_start, link_violation, ScaOptions, ScaStop, ScaTrace, AUDIT_SLACK};
use crate::error::{Error, Result};
use crate::fp::{f_a_from_links, AuxVars};
use crate::model::{
    c4_violation, CVector, ChannelSet, Links, ReflectionModel, Solution, SystemConfig, C64,
};
use crate::qcqp::{self, complex_stack, complex_unstack, ComplexAffine, QcqpStatus};
use crate::scalar::golden_section_max;
use crate::surrogate::{assemble, LinkMaps, NormTerm};

pub use crate::surrogate::{ConstraintTag, Subproblem};

/// Amplitude of a reflecting element as a function of its phase.
pub trait AmplitudeModel {
    fn amplitude(&self, theta: f64) -> f64;

    fn coefficient(&self, theta: f64) -> C64 {
        C64::from_polar(self.amplitude(theta), theta)
    }
}

impl AmplitudeModel for ReflectionModel {
    fn amplitude(&self, theta: f64) -> f64 {
        ReflectionModel::amplitude(self, theta)
    }
}

/// `f_min + (1 - f_min)·((sin(θ - φ) + 1)/2)^α`.
pub fn reflection_amplitude(model: &ReflectionModel, theta: f64) -> f64 {
    model.amplitude(theta)
}

/// `v_n = f(θ_n) e^{jθ_n}` for every element.
pub fn project_c4<A: AmplitudeModel + ?Sized>(model: &A, theta: &DVector<f64>) -> CVector {
    CVector::from_fn(theta.len(), |n, _| model.coefficient(theta[n]))
}

/// `2 f(θ)|v| cos(arg v - θ) - f(θ)²`, the part of `-|v - f(θ)e^{jθ}|²` that
/// depends on `θ`.
pub fn phase_objective<A: AmplitudeModel + ?Sized>(model: &A, v: C64, theta: f64) -> f64 {
    let f = model.amplitude(theta);
    2.0 * f * (v.re * theta.cos() + v.im * theta.sin()) - f * f
}

pub const THETA_GRID_POINTS: usize = 2048;

const MAX_REFINED_PEAKS: usize = 4;

/// Precomputed uniform phase grid over `[-π, π]` for repeated phase searches
/// under one amplitude model.
pub struct ThetaSearch<'a, A: AmplitudeModel + ?Sized> {
    model: &'a A,
    theta: Vec<f64>,
    f_cos: Vec<f64>,
    f_sin: Vec<f64>,
    f_sq: Vec<f64>,
    step: f64,
}

impl<'a, A: AmplitudeModel + ?Sized> ThetaSearch<'a, A> {
    pub fn new(model: &'a A, points: usize) -> Self {
        let points = points.max(3);
        let step = 2.0 * PI / (points - 1) as f64;
        let theta: Vec<f64> = (0..points)
            .map(|j| {
                if j + 1 == points {
                    PI
                } else {
                    -PI + step * j as f64
                }
            })
            .collect();
        let amp: Vec<f64> = theta.iter().map(|&t| model.amplitude(t)).collect();
        Self {
            f_cos: theta.iter().zip(&amp).map(|(t, f)| f * t.cos()).collect(),
            f_sin: theta.iter().zip(&amp).map(|(t, f)| f * t.sin()).collect(),
            f_sq: amp.iter().map(|f| f * f).collect(),
            theta,
            model,
            step,
        }
    }

    /// Maximizer of [`phase_objective`] for `v`: the best grid point, refined
    /// by golden-section search around every grid-local maximum that comes
    /// close to the best grid value.
    pub fn best(&self, v: C64) -> f64 {
        let values: Vec<f64> = (0..self.theta.len())
            .map(|j| 2.0 * (self.f_cos[j] * v.re + self.f_sin[j] * v.im) - self.f_sq[j])
            .collect();
        let last = values.len() - 1;
        let (j_best, g_best) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let spread = values.iter().copied().fold(f64::INFINITY, f64::min);
        // grid values of distinct peaks can swap order within this margin
        let margin = 1e-3 * (g_best - spread).max(1e-300);
        let mut peaks: Vec<usize> = (0..=last)
            .filter(|&j| {
                let left = if j == 0 {
                    f64::NEG_INFINITY
                } else {
                    values[j - 1]
                };
                let right = if j == last {
                    f64::NEG_INFINITY
                } else {
                    values[j + 1]
                };
                values[j] >= left && values[j] >= right && values[j] >= g_best - margin
            })
            .collect();
        peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        peaks.truncate(MAX_REFINED_PEAKS);
        let mut best = (self.theta[j_best], g_best);
        for j in peaks {
            let lo = (self.theta[j] - self.step).max(-PI);
            let hi = (self.theta[j] + self.step).min(PI);
            let (t, val) = golden_section_max(|t| phase_objective(self.model, v, t), lo, hi, 1e-12);
            if val > best.1 {
                best = (t, val);
            }
        }
        best.0
    }
}

/// Phase of one element maximizing [`phase_objective`] over `[-π, π]`.
pub fn optimal_theta<A: AmplitudeModel + ?Sized>(model: &A, v: C64) -> f64 {
    ThetaSearch::new(model, THETA_GRID_POINTS).best(v)
}

/// `z[k][i] = h_{d,k} w_i + v^H H_{r,k} w_i` as affine functions of `[Re v; Im v]`.
pub(crate) fn v_maps(channels: &ChannelSet, w: &[CVector]) -> LinkMaps {
    let n = channels.elements();
    let z = channels
        .h_d
        .iter()
        .zip(&channels.h_r_cascade)
        .map(|(hd, hr)| {
            w.iter()
                .map(|wi| {
                    let a = hr * wi;
                    let mut coeffs = CVector::zeros(2 * n);
                    for (row, &an) in a.iter().enumerate() {
                        coeffs[row] = an;
                        coeffs[n + row] = an * C64::new(0.0, -1.0);
                    }
                    ComplexAffine {
                        constant: crate::model::row_dot(hd, wi),
                        coeffs,
                    }
                })
                .collect()
        })
        .collect();
    LinkMaps { z }
}

/// `f_A - Γ·c4`, the objective every block of one penalty stage ascends.
pub fn penalized_value(
    cfg: &SystemConfig,
    links: &Links,
    sol: &Solution,
    aux: &AuxVars,
    penalty: f64,
) -> f64 {
    let c4 = c4_violation(&cfg.reflection, &sol.v, sol.theta.as_slice());
    f_a_from_links(cfg, links, &sol.rho, aux) - penalty * c4
}

/// Surrogate program for the reflection vector over the full stacked vector,
/// expanded at `sol.v`, with the C4 penalty centered at the current phases.
pub fn build_v_subproblem(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
    penalty: f64,
) -> Result<Subproblem> {
    sol.check(cfg)?;
    sol.check_split()?;
    channels.check(cfg)?;
    if !(penalty >= 0.0) {
        return Err(Error::invalid("penalty", "must be nonnegative"));
    }
    let maps = v_maps(channels, &sol.w);
    let center = complex_stack(&[project_c4(&cfg.reflection, &sol.theta)]);
    let sub = assemble(
        cfg,
        &maps,
        complex_stack(std::slice::from_ref(&sol.v)),
        &sol.rho,
        aux,
        &NormTerm::Penalty {
            weight: penalty,
            center,
        },
    );
    check_start(&sub)?;
    Ok(sub)
}

/// Runs the reflection SCA loop from `sol.v` at penalty `Γ`. The returned
/// vector never lowers `f_A - Γ·c4` and keeps the true constraints satisfied.
pub fn update_v(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
    penalty: f64,
    opts: &ScaOptions,
) -> Result<(CVector, ScaTrace)> {
    sol.check(cfg)?;
    sol.check_split()?;
    channels.check(cfg)?;
    if !(penalty >= 0.0) {
        return Err(Error::invalid("penalty", "must be nonnegative"));
    }
    let n = cfg.n;
    let full = v_maps(channels, &sol.w);
    let basis = full.active_basis();
    let u = complex_stack(&[project_c4(&cfg.reflection, &sol.theta)]);
    // directions that no link sees only pay the penalty, so they sit at `u`
    let base = &u - &basis * basis.tr_mul(&u);
    let reduced = full.restrict(&base, &basis);
    let center = basis.tr_mul(&u);
    let norm = NormTerm::Penalty {
        weight: penalty,
        center,
    };

    let mut work = sol.clone();
    let links = Links::evaluate(channels, &work)?;
    let mut p_cur = penalized_value(cfg, &links, &work, aux, penalty);
    let mut trace = ScaTrace {
        objective: vec![p_cur],
        iterations: 0,
        newton_steps: 0,
        stop: ScaStop::Cap,
    };
    for iter in 0..opts.cap {
        let y0 = basis.tr_mul(&complex_stack(std::slice::from_ref(&work.v)));
        let sub = assemble(cfg, &reduced, y0, &work.rho, aux, &norm);
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
        let x = &base + &basis * &out.x;
        let mut candidate = work.clone();
        candidate.v = complex_unstack(&x, &[n]).remove(0);
        let links = Links::evaluate(channels, &candidate)?;
        let p_new = penalized_value(cfg, &links, &candidate, aux, penalty);
        let power = candidate.transmit_power();
        if link_violation(cfg, &links, &candidate.rho, power) > AUDIT_SLACK || !(p_new >= p_cur) {
            trace.stop = ScaStop::NoProgress;
            break;
        }
        let gain = (p_new - p_cur) / p_cur.abs().max(1e-300);
        work = candidate;
        p_cur = p_new;
        trace.objective.push(p_cur);
        if gain < opts.tol {
            trace.stop = ScaStop::Converged;
            break;
        }
    }
    Ok((work.v, trace))
}
