//! Fractional-programming reformulation of the weighted rate objective.
//!
//! The logarithms of the information SINR and of the harvesting SNR are
//! rewritten with auxiliaries `α` (Lagrangian-dual transform) and `β`
//! (quadratic transform). At fixed primal variables the reformulated value
//! `f_A` is a lower bound on `R^ID + λ̄·R^PH` that becomes tight at the
//! auxiliary optimum, and it is concave in each of `ρ`, `w` and `v` separately.
//! All values are in bits (the natural-log form divided by `ln 2`).

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{ChannelSet, Links, Solution, SystemConfig, C64, RHO_FLOOR};
use crate::scalar::{bisect_decreasing, golden_section_max};

#[derive(Debug, Clone, PartialEq)]
pub struct AuxVars {
    pub alpha_i: Vec<f64>,
    pub beta_i: Vec<C64>,
    pub alpha_e: Vec<f64>,
    /// One coefficient per (user, beam) pair, `beta_e[k][i]`.
    pub beta_e: Vec<Vec<C64>>,
}

impl AuxVars {
    pub fn zeros(k: usize) -> Self {
        Self {
            alpha_i: vec![0.0; k],
            beta_i: vec![C64::new(0.0, 0.0); k],
            alpha_e: vec![0.0; k],
            beta_e: vec![vec![C64::new(0.0, 0.0); k]; k],
        }
    }

    pub fn users(&self) -> usize {
        self.alpha_i.len()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha_i
            .iter()
            .chain(&self.alpha_e)
            .all(|a| a.is_finite())
            && self.beta_i.iter().all(|b| b.is_finite())
            && self.beta_e.iter().flatten().all(|b| b.is_finite())
    }

    fn check(&self, k: usize) -> Result<()> {
        if self.users() != k || self.beta_i.len() != k || self.alpha_e.len() != k {
            return Err(Error::dim("aux users", k, self.users()));
        }
        if self.beta_e.len() != k || self.beta_e.iter().any(|b| b.len() != k) {
            return Err(Error::dim("aux beta_e", k, self.beta_e.len()));
        }
        Ok(())
    }

    fn beta_e_energy(&self, k: usize) -> f64 {
        self.beta_e[k].iter().map(|b| b.norm_sqr()).sum()
    }
}

/// `α = (r² + r√(r² + 4)) / 2`, the maximizer of `ln(1+α) - α + 2r√(1+α)`.
#[inline]
pub fn alpha_closed_form(r: f64) -> f64 {
    (r * r + r * (r * r + 4.0).sqrt()) / 2.0
}

fn links_for(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution) -> Result<Links> {
    sol.check(cfg)?;
    channels.check(cfg)?;
    sol.check_split()?;
    Links::evaluate(channels, sol)
}

pub fn f_a_value(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
) -> Result<f64> {
    aux.check(cfg.k)?;
    let links = links_for(cfg, channels, sol)?;
    Ok(f_a_from_links(cfg, &links, &sol.rho, aux))
}

pub(crate) fn f_a_from_links(cfg: &SystemConfig, links: &Links, rho: &[f64], aux: &AuxVars) -> f64 {
    let lam = cfg.lambda_bar;
    let eta_bar = cfg.eta_bar();
    let mut total = 0.0;
    for k in 0..links.users() {
        let (ai, ae) = (aux.alpha_i[k], aux.alpha_e[k]);
        let received = links.received(k);
        let p = rho[k];
        total += (1.0 + ai).ln() + lam * (1.0 + ae).ln() - (ai + lam * ae);
        total += 2.0 * (p * (1.0 + ai)).sqrt() * (aux.beta_i[k].conj() * links.z[k][k]).re;
        total -= aux.beta_i[k].norm_sqr() * (p * received + p * cfg.sigma2 + cfg.delta2);
        let eh_corr: f64 = aux.beta_e[k]
            .iter()
            .zip(&links.z[k])
            .map(|(b, z)| (b.conj() * z).re)
            .sum();
        total += 2.0 * lam * (eta_bar * (1.0 - p) * (1.0 + ae)).sqrt() * eh_corr;
        total -= lam * aux.beta_e_energy(k) * (eta_bar * (1.0 - p) * received + cfg.sigma2);
    }
    total / LN_2
}

/// Closed-form information auxiliaries: `β_I` at the current `α_I`, then
/// `α_I` from the fresh `β_I`.
pub fn update_aux_id(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
) -> Result<(Vec<f64>, Vec<C64>)> {
    aux.check(cfg.k)?;
    let links = links_for(cfg, channels, sol)?;
    Ok(aux_id_from_links(cfg, &links, &sol.rho, &aux.alpha_i))
}

pub(crate) fn aux_id_from_links(
    cfg: &SystemConfig,
    links: &Links,
    rho: &[f64],
    alpha_i: &[f64],
) -> (Vec<f64>, Vec<C64>) {
    let k_users = links.users();
    let mut alpha = Vec::with_capacity(k_users);
    let mut beta = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let p = rho[k];
        let denom = p * links.received(k) + p * cfg.sigma2 + cfg.delta2;
        let b = links.z[k][k] * ((p * (1.0 + alpha_i[k])).sqrt() / denom);
        let r = p.sqrt() * (b.conj() * links.z[k][k]).re;
        alpha.push(alpha_closed_form(r));
        beta.push(b);
    }
    (alpha, beta)
}

/// Closed-form harvesting auxiliaries: `β_E` at the current `α_E`, then `α_E`
/// from the fresh `β_E`.
pub fn update_aux_eh(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    aux.check(cfg.k)?;
    let links = links_for(cfg, channels, sol)?;
    Ok(aux_eh_from_links(cfg, &links, &sol.rho, &aux.alpha_e))
}

pub(crate) fn aux_eh_from_links(
    cfg: &SystemConfig,
    links: &Links,
    rho: &[f64],
    alpha_e: &[f64],
) -> (Vec<f64>, Vec<Vec<C64>>) {
    let eta_bar = cfg.eta_bar();
    let k_users = links.users();
    let mut alpha = Vec::with_capacity(k_users);
    let mut beta = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let gain = eta_bar * (1.0 - rho[k]);
        let denom = gain * links.received(k) + cfg.sigma2;
        let scale = (gain * (1.0 + alpha_e[k])).sqrt() / denom;
        let b: Vec<C64> = links.z[k].iter().map(|z| z * scale).collect();
        let corr: f64 = b
            .iter()
            .zip(&links.z[k])
            .map(|(b, z)| (b.conj() * z).re)
            .sum();
        let r = gain.sqrt() * corr;
        alpha.push(alpha_closed_form(r));
        beta.push(b);
    }
    (alpha, beta)
}

/// Joint maximizer of `f_A` over all auxiliaries at a fixed primal point:
/// `α_I = SINR`, `α_E` = harvesting SNR, and the `β` closed forms evaluated
/// at those `α`. This is the fixed point of [`update_aux_id`] and
/// [`update_aux_eh`], where `f_A` equals the weighted objective. With
/// `eh = false` the harvesting auxiliaries stay zero, which drops every
/// harvesting term from `f_A`.
pub fn tight_aux(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    eh: bool,
) -> Result<AuxVars> {
    let links = links_for(cfg, channels, sol)?;
    Ok(tight_aux_from_links(cfg, &links, &sol.rho, eh))
}

pub(crate) fn tight_aux_from_links(
    cfg: &SystemConfig,
    links: &Links,
    rho: &[f64],
    eh: bool,
) -> AuxVars {
    let mut aux = AuxVars::zeros(links.users());
    let sinr = links.sinr(cfg, rho);
    let (_, beta_i) = aux_id_from_links(cfg, links, rho, &sinr);
    aux.alpha_i = sinr;
    aux.beta_i = beta_i;
    if eh {
        let snr = links.eh_snr(cfg, rho);
        let (_, beta_e) = aux_eh_from_links(cfg, links, rho, &snr);
        aux.alpha_e = snr;
        aux.beta_e = beta_e;
    }
    aux
}

/// Feasible power-split range `[lo, hi]` for user `k` from the linearized SINR
/// constraint and the harvesting floor, intersected with `[ρ_floor, 1]`.
pub fn rho_feasible_interval(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    k: usize,
) -> Result<(f64, f64)> {
    if k >= cfg.k {
        return Err(Error::dim("rho_feasible_interval user", cfg.k, k));
    }
    let links = links_for(cfg, channels, sol)?;
    split_interval(cfg, &links, k)
}

pub(crate) fn split_interval(cfg: &SystemConfig, links: &Links, k: usize) -> Result<(f64, f64)> {
    let (lo_raw, hi_raw) = split_bounds(cfg, links, k);
    let lo = lo_raw.max(RHO_FLOOR);
    let hi = hi_raw.min(1.0);
    if lo > hi {
        return Err(Error::EmptySplitInterval { user: k, lo, hi });
    }
    Ok((lo, hi))
}

fn split_bounds(cfg: &SystemConfig, links: &Links, k: usize) -> (f64, f64) {
    let lo = if cfg.gamma_min == 0.0 {
        f64::NEG_INFINITY
    } else {
        let coef = links.signal(k) - cfg.gamma_min * (links.interference(k) + cfg.sigma2);
        let rhs = cfg.gamma_min * cfg.delta2;
        if coef > 0.0 {
            rhs / coef
        } else if rhs == 0.0 && coef == 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    };
    let hi = if cfg.p_min == 0.0 {
        f64::INFINITY
    } else {
        let harvestable = cfg.eta * links.received(k);
        if harvestable > 0.0 {
            1.0 - cfg.p_min / harvestable
        } else {
            f64::NEG_INFINITY
        }
    };
    (lo, hi)
}

/// `a√ρ + b√(1-ρ) + cρ + d(1-ρ)`, the part of `f_A` (natural-log units) that
/// depends on one user's split ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitObjective {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SplitObjective {
    pub fn value(&self, rho: f64) -> f64 {
        self.a * rho.sqrt() + self.b * (1.0 - rho).sqrt() + self.c * rho + self.d * (1.0 - rho)
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        let left = if self.a == 0.0 {
            0.0
        } else {
            self.a / (2.0 * rho.sqrt())
        };
        let right = if self.b == 0.0 {
            0.0
        } else {
            self.b / (2.0 * (1.0 - rho).sqrt())
        };
        left - right + self.c - self.d
    }

    /// Global maximizer on `[lo, hi]`: derivative bisection when the function
    /// is concave (`a, b ≥ 0`), otherwise a grid scan refined by golden section.
    pub fn maximize(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        if self.a >= 0.0 && self.b >= 0.0 {
            return bisect_decreasing(|r| self.derivative(r), lo, hi, 1e-12);
        }
        let steps = 2000;
        let h = (hi - lo) / steps as f64;
        let best = (0..=steps)
            .map(|i| if i == steps { hi } else { lo + h * i as f64 })
            .map(|r| (r, self.value(r)))
            .fold(
                (lo, f64::NEG_INFINITY),
                |b, c| if c.1 > b.1 { c } else { b },
            );
        let (r, fr) = golden_section_max(
            |r| self.value(r),
            (best.0 - h).max(lo),
            (best.0 + h).min(hi),
            1e-12,
        );
        if fr >= best.1 {
            r
        } else {
            best.0
        }
    }
}

pub(crate) fn split_objective(
    cfg: &SystemConfig,
    links: &Links,
    aux: &AuxVars,
    k: usize,
) -> SplitObjective {
    let lam = cfg.lambda_bar;
    let eta_bar = cfg.eta_bar();
    let received = links.received(k);
    let eh_corr: f64 = aux.beta_e[k]
        .iter()
        .zip(&links.z[k])
        .map(|(b, z)| (b.conj() * z).re)
        .sum();
    SplitObjective {
        a: 2.0 * (1.0 + aux.alpha_i[k]).sqrt() * (aux.beta_i[k].conj() * links.z[k][k]).re,
        b: 2.0 * lam * (eta_bar * (1.0 + aux.alpha_e[k])).sqrt() * eh_corr,
        c: -aux.beta_i[k].norm_sqr() * (received + cfg.sigma2),
        d: -lam * aux.beta_e_energy(k) * eta_bar * received,
    }
}

/// Optimal split ratio of user `k` with every other variable fixed.
pub fn update_rho(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    aux: &AuxVars,
    k: usize,
) -> Result<f64> {
    aux.check(cfg.k)?;
    if k >= cfg.k {
        return Err(Error::dim("update_rho user", cfg.k, k));
    }
    let links = links_for(cfg, channels, sol)?;
    let (lo, hi) = split_interval(cfg, &links, k)?;
    Ok(split_objective(cfg, &links, aux, k).maximize(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CMatrix, CVector};
    use nalgebra::DVector;

    #[test]
    fn alpha_closed_form_values() {
        assert_eq!(alpha_closed_form(0.0), 0.0);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((alpha_closed_form(1.0) - golden).abs() < 1e-15);
        assert!((alpha_closed_form(1.0) - 1.6180).abs() < 1e-4);
    }

    fn single_user(gain: f64, rho: f64) -> (SystemConfig, ChannelSet, Solution) {
        let cfg = SystemConfig {
            m: 1,
            k: 1,
            n: 0,
            sigma2: 1.0,
            delta2: 1.0,
            gamma_min: 0.5,
            p_min: 1.0,
            eta: 1.0,
            ..SystemConfig::reference()
        };
        let ch = ChannelSet::new(
            CMatrix::zeros(0, 1),
            vec![CVector::from_element(1, C64::new(1.0, 0.0))],
            vec![CVector::zeros(0)],
        )
        .unwrap();
        let sol = Solution {
            w: vec![CVector::from_element(1, C64::new(gain.sqrt(), 0.0))],
            v: CVector::zeros(0),
            theta: DVector::zeros(0),
            rho: vec![rho],
        };
        (cfg, ch, sol)
    }

    #[test]
    fn zero_aux_gives_zero() {
        let (cfg, ch, sol) = single_user(3.0, 0.4);
        assert_eq!(f_a_value(&cfg, &ch, &sol, &AuxVars::zeros(1)).unwrap(), 0.0);
    }

    #[test]
    fn hand_built_interval() {
        // coefficient S - γ(I + σ²) = 2 and γδ² = 0.5 with γ = 0.5, δ² = 1
        let (cfg, ch, sol) = single_user(2.5, 0.5);
        let (lo, hi) = rho_feasible_interval(&cfg, &ch, &sol, 0).unwrap();
        assert!((lo - 0.25).abs() < 1e-15);
        // η Σ = 2.5 with P_min = 1 gives 0.6; rescale to η Σ = 4
        assert!((hi - 0.6).abs() < 1e-15);
        let mut cfg4 = cfg.clone();
        cfg4.eta = 4.0 / 2.5;
        let links = Links::evaluate(&ch, &sol).unwrap();
        let (_, hi4) = split_bounds(&cfg4, &links, 0);
        assert!((hi4 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn vacuous_constraints_give_full_interval() {
        let (mut cfg, ch, sol) = single_user(2.5, 0.5);
        cfg.gamma_min = 0.0;
        cfg.p_min = 0.0;
        let (lo, hi) = rho_feasible_interval(&cfg, &ch, &sol, 0).unwrap();
        assert_eq!((lo, hi), (RHO_FLOOR, 1.0));
    }

    #[test]
    fn weak_signal_gives_empty_interval() {
        let (mut cfg, ch, sol) = single_user(0.4, 0.5);
        cfg.p_min = 0.0;
        assert!(matches!(
            rho_feasible_interval(&cfg, &ch, &sol, 0),
            Err(Error::EmptySplitInterval { .. })
        ));
    }

    #[test]
    fn split_stationary_point() {
        let obj = SplitObjective {
            a: 1.0,
            b: 0.0,
            c: -1.0,
            d: 0.0,
        };
        let r = obj.maximize(RHO_FLOOR, 1.0);
        assert!((r - 0.25).abs() < 1e-10);
        let (g, _) = golden_section_max(|x| obj.value(x), RHO_FLOOR, 1.0, 1e-12);
        assert!((g - 0.25).abs() < 1e-6);
    }

    #[test]
    fn increasing_split_objective_hits_upper_end() {
        let obj = SplitObjective {
            a: 1.0,
            b: 0.0,
            c: 1.0,
            d: 0.0,
        };
        assert_eq!(obj.maximize(0.1, 0.7), 0.7);
    }

    #[test]
    fn eh_aux_vanishes_without_harvesting() {
        let (cfg, ch, mut sol) = single_user(2.0, 1.0);
        let (alpha, beta) = update_aux_eh(&cfg, &ch, &sol, &AuxVars::zeros(1)).unwrap();
        assert_eq!(alpha[0], 0.0);
        assert_eq!(beta[0][0], C64::new(0.0, 0.0));
        sol.w[0][0] = C64::new(0.0, 0.0);
        sol.rho[0] = 0.3;
        let (alpha, beta) = update_aux_eh(&cfg, &ch, &sol, &AuxVars::zeros(1)).unwrap();
        assert_eq!(alpha[0], 0.0);
        assert_eq!(beta[0][0], C64::new(0.0, 0.0));
    }
}
