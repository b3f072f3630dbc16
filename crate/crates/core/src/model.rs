//! Domain types and metric evaluation for the RIS-aided MISO SWIPT downlink.
//!
//! A scenario has one `M`-antenna base station, `K` single-antenna users and an
//! `N`-element reflecting surface. Every metric is a pure function of a
//! [`SystemConfig`], a [`ChannelSet`] and a [`Solution`]; all powers are in
//! milliwatts and all rates in bits/s/Hz.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Smallest power-split ratio the optimizer will produce.
pub const RHO_FLOOR: f64 = 1e-6;

/// Phase-dependent amplitude of a practical reflecting element,
/// `f(θ) = f_min + (1 - f_min) · ((sin(θ - φ) + 1) / 2)^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionModel {
    pub f_min: f64,
    pub alpha: f64,
    pub phi: f64,
}

impl Default for ReflectionModel {
    fn default() -> Self {
        Self {
            f_min: 0.2,
            alpha: 1.6,
            phi: 0.43 * std::f64::consts::PI,
        }
    }
}

impl ReflectionModel {
    /// Unit amplitude at every phase.
    pub fn ideal() -> Self {
        Self {
            f_min: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.f_min) {
            return Err(Error::invalid("f_min", "must lie in [0, 1]"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be a finite value >= 0"));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return Err(Error::invalid("phi", "must be a finite value >= 0"));
        }
        Ok(())
    }

    #[inline]
    pub fn amplitude(&self, theta: f64) -> f64 {
        let base = 0.5 * ((theta - self.phi).sin() + 1.0);
        self.f_min + (1.0 - self.f_min) * base.clamp(0.0, 1.0).powf(self.alpha)
    }

    /// Reflection coefficient `f(θ) e^{jθ}`.
    #[inline]
    pub fn coefficient(&self, theta: f64) -> C64 {
        C64::from_polar(self.amplitude(theta), theta)
    }
}

/// Scenario constants. Per-user noise and efficiency figures are shared scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas.
    pub m: usize,
    /// Users.
    pub k: usize,
    /// Reflecting elements.
    pub n: usize,
    /// Total transmit power budget, mW.
    pub p_t: f64,
    /// Thermal noise power, mW.
    pub sigma2: f64,
    /// RF-to-baseband conversion noise power, mW.
    pub delta2: f64,
    /// Harvesting efficiency.
    pub eta: f64,
    /// Baseband-to-RF conversion efficiency.
    pub xi: f64,
    /// Weight of the harvested-power rate in the objective.
    pub lambda_bar: f64,
    /// Minimum SINR, linear.
    pub gamma_min: f64,
    /// Minimum harvested power, mW.
    pub p_min: f64,
    pub reflection: ReflectionModel,
}

impl SystemConfig {
    /// Reference scenario: 8 antennas, 4 users, 60 elements, 40 dBm budget,
    /// -40 dBm thermal noise, -50 dBm conversion noise, 10 dB SINR target.
    pub fn reference() -> Self {
        Self {
            m: 8,
            k: 4,
            n: 60,
            p_t: 1.0e4,
            sigma2: 1.0e-4,
            delta2: 1.0e-5,
            eta: 0.6,
            xi: 0.005,
            lambda_bar: 0.6,
            gamma_min: 10.0,
            p_min: 1.0e-5,
            reflection: ReflectionModel::default(),
        }
    }

    /// `ξ η`, the efficiency inside the harvested-power rate.
    #[inline]
    pub fn eta_bar(&self) -> f64 {
        self.xi * self.eta
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m", "need at least one antenna"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k", "need at least one user"));
        }
        for (name, value) in [
            ("p_t", self.p_t),
            ("sigma2", self.sigma2),
            ("delta2", self.delta2),
            ("p_min", self.p_min),
            ("lambda_bar", self.lambda_bar),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::invalid(name, "must be a finite value >= 0"));
            }
        }
        if self.sigma2 <= 0.0 {
            return Err(Error::invalid("sigma2", "thermal noise must be positive"));
        }
        for (name, value) in [("eta", self.eta), ("xi", self.xi)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::invalid(name, "must lie in [0, 1]"));
            }
        }
        if !(self.gamma_min >= 0.0 && self.gamma_min.is_finite()) {
            return Err(Error::invalid("gamma_min", "must be a finite value >= 0"));
        }
        self.reflection.validate()
    }
}

/// One channel realization. `h_r_cascade[k]` is `diag(h_r[k]) · G`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS to surface, `N × M`.
    pub g: CMatrix,
    /// BS to user `k`, entries of the `1 × M` row.
    pub h_d: Vec<CVector>,
    /// Surface to user `k`, entries of the `1 × N` row.
    pub h_r: Vec<CVector>,
    pub h_r_cascade: Vec<CMatrix>,
}

impl ChannelSet {
    pub fn new(g: CMatrix, h_d: Vec<CVector>, h_r: Vec<CVector>) -> Result<Self> {
        let (n, m) = g.shape();
        if h_d.len() != h_r.len() {
            return Err(Error::dim("ChannelSet users", h_d.len(), h_r.len()));
        }
        for h in &h_d {
            if h.len() != m {
                return Err(Error::dim("ChannelSet h_d", m, h.len()));
            }
        }
        for h in &h_r {
            if h.len() != n {
                return Err(Error::dim("ChannelSet h_r", n, h.len()));
            }
        }
        let h_r_cascade = h_r
            .iter()
            .map(|hr| CMatrix::from_fn(n, m, |row, col| hr[row] * g[(row, col)]))
            .collect();
        Ok(Self {
            g,
            h_d,
            h_r,
            h_r_cascade,
        })
    }

    pub fn antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn elements(&self) -> usize {
        self.g.nrows()
    }

    pub fn users(&self) -> usize {
        self.h_d.len()
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.antennas() != cfg.m {
            return Err(Error::dim("channels antennas", cfg.m, self.antennas()));
        }
        if self.users() != cfg.k {
            return Err(Error::dim("channels users", cfg.k, self.users()));
        }
        if self.elements() != cfg.n {
            return Err(Error::dim("channels elements", cfg.n, self.elements()));
        }
        Ok(())
    }
}

/// Decision variables of the joint design.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Beamformer of each user, length `M`.
    pub w: Vec<CVector>,
    /// Reflection coefficients, length `N`.
    pub v: CVector,
    /// Element phases, radians.
    pub theta: DVector<f64>,
    /// Power-split ratio of each user.
    pub rho: Vec<f64>,
}

impl Solution {
    pub fn transmit_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_squared()).sum()
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.w.len() != cfg.k {
            return Err(Error::dim("solution beamformers", cfg.k, self.w.len()));
        }
        for w in &self.w {
            if w.len() != cfg.m {
                return Err(Error::dim("solution beamformer length", cfg.m, w.len()));
            }
        }
        if self.v.len() != cfg.n {
            return Err(Error::dim("solution v", cfg.n, self.v.len()));
        }
        if self.theta.len() != cfg.n {
            return Err(Error::dim("solution theta", cfg.n, self.theta.len()));
        }
        if self.rho.len() != cfg.k {
            return Err(Error::dim("solution rho", cfg.k, self.rho.len()));
        }
        Ok(())
    }

    pub fn check_split(&self) -> Result<()> {
        for (user, &value) in self.rho.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::SplitOutOfRange { user, value });
            }
        }
        Ok(())
    }
}

/// `h_k = h_{d,k} + v^H H_{r,k}` for every user.
pub fn effective_channels(channels: &ChannelSet, v: &CVector) -> Result<Vec<CVector>> {
    let n = channels.elements();
    if v.len() != n {
        return Err(Error::dim("effective_channels v", n, v.len()));
    }
    let v_conj = v.map(|x| x.conj());
    Ok(channels
        .h_d
        .iter()
        .zip(&channels.h_r_cascade)
        .map(|(hd, hr)| {
            if n == 0 {
                hd.clone()
            } else {
                hd + hr.tr_mul(&v_conj)
            }
        })
        .collect())
}

/// Row-times-column product `h w` (no conjugation).
#[inline]
pub fn row_dot(h: &CVector, w: &CVector) -> C64 {
    h.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
}

/// Matrix of link amplitudes `z[k][i] = h_k w_i`.
#[derive(Debug, Clone)]
pub struct Links {
    pub z: Vec<Vec<C64>>,
}

impl Links {
    pub fn new(h_eff: &[CVector], w: &[CVector]) -> Self {
        let z = h_eff
            .iter()
            .map(|h| w.iter().map(|wi| row_dot(h, wi)).collect())
            .collect();
        Self { z }
    }

    pub fn evaluate(channels: &ChannelSet, sol: &Solution) -> Result<Self> {
        let h = effective_channels(channels, &sol.v)?;
        Ok(Self::new(&h, &sol.w))
    }

    pub fn users(&self) -> usize {
        self.z.len()
    }

    /// `|h_k w_k|²`.
    #[inline]
    pub fn signal(&self, k: usize) -> f64 {
        self.z[k][k].norm_sqr()
    }

    /// `Σ_{i≠k} |h_k w_i|²`.
    pub fn interference(&self, k: usize) -> f64 {
        self.z[k]
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// `Σ_i |h_k w_i|²`, the total power received by user `k`.
    pub fn received(&self, k: usize) -> f64 {
        self.z[k].iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Σ_i h_k w_i`.
    pub fn coherent_sum(&self, k: usize) -> C64 {
        self.z[k].iter().sum()
    }

    pub fn sinr(&self, cfg: &SystemConfig, rho: &[f64]) -> Vec<f64> {
        (0..self.users())
            .map(|k| self.signal(k) / (self.interference(k) + cfg.sigma2 + cfg.delta2 / rho[k]))
            .collect()
    }

    /// Argument of the harvested-power rate logarithm for each user.
    pub fn eh_snr(&self, cfg: &SystemConfig, rho: &[f64]) -> Vec<f64> {
        (0..self.users())
            .map(|k| cfg.eta_bar() * (1.0 - rho[k]) * self.received(k) / cfg.sigma2)
            .collect()
    }

    pub fn harvested(&self, cfg: &SystemConfig, rho: &[f64]) -> Vec<f64> {
        (0..self.users())
            .map(|k| cfg.eta * (1.0 - rho[k]) * self.received(k))
            .collect()
    }
}

fn prepared(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution) -> Result<Links> {
    sol.check(cfg)?;
    channels.check(cfg)?;
    Links::evaluate(channels, sol)
}

pub fn sinr(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution) -> Result<Vec<f64>> {
    sol.check_split()?;
    Ok(prepared(cfg, channels, sol)?.sinr(cfg, &sol.rho))
}

/// Information sum-rate `Σ_k log2(1 + SINR_k)`.
pub fn sum_rate_id(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution) -> Result<f64> {
    Ok(sinr(cfg, channels, sol)?
        .iter()
        .map(|s| (1.0 + s).log2())
        .sum())
}

pub fn harvested_power(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
) -> Result<Vec<f64>> {
    Ok(prepared(cfg, channels, sol)?.harvested(cfg, &sol.rho))
}

/// Harvested-power rate `Σ_k log2(1 + ξη(1-ρ_k) Σ_i |h_k w_i|² / σ²)`.
pub fn rate_ph(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution) -> Result<f64> {
    if cfg.sigma2 <= 0.0 {
        return Err(Error::invalid("sigma2", "thermal noise must be positive"));
    }
    Ok(prepared(cfg, channels, sol)?
        .eh_snr(cfg, &sol.rho)
        .iter()
        .map(|s| (1.0 + s).log2())
        .sum())
}

pub fn weighted_objective(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
) -> Result<f64> {
    Ok(evaluate(cfg, channels, sol)?.objective)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub sinr: Vec<f64>,
    pub rate_id_per_user: Vec<f64>,
    pub rate_id: f64,
    pub p_harv: Vec<f64>,
    pub rate_ph: f64,
    pub objective: f64,
    pub c4_violation: f64,
}

impl Metrics {
    pub fn harvested_total(&self) -> f64 {
        self.p_harv.iter().sum()
    }
}

/// All metrics at once, sharing one pass over the link amplitudes.
pub fn evaluate(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution) -> Result<Metrics> {
    sol.check_split()?;
    let links = prepared(cfg, channels, sol)?;
    Ok(metrics_from_links(cfg, sol, &links))
}

pub(crate) fn metrics_from_links(cfg: &SystemConfig, sol: &Solution, links: &Links) -> Metrics {
    let sinr = links.sinr(cfg, &sol.rho);
    let rate_id_per_user: Vec<f64> = sinr.iter().map(|s| (1.0 + s).log2()).collect();
    let rate_id = rate_id_per_user.iter().sum();
    let rate_ph = links
        .eh_snr(cfg, &sol.rho)
        .iter()
        .map(|s| (1.0 + s).log2())
        .sum();
    Metrics {
        rate_id_per_user,
        rate_id,
        p_harv: links.harvested(cfg, &sol.rho),
        rate_ph,
        objective: rate_id + cfg.lambda_bar * rate_ph,
        c4_violation: c4_violation(&cfg.reflection, &sol.v, sol.theta.as_slice()),
        sinr,
    }
}

/// `Σ_n |v_n - f(θ_n) e^{jθ_n}|²`.
pub fn c4_violation(model: &ReflectionModel, v: &CVector, theta: &[f64]) -> f64 {
    v.iter()
        .zip(theta)
        .map(|(vn, &t)| (vn - model.coefficient(t)).norm_sqr())
        .sum()
}

/// Signed constraint residuals; every inequality entry is `<= 0` at a feasible
/// point, and `c4` is an equality residual that must vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `γ_min - SINR_k`.
    pub c1: Vec<f64>,
    /// `P_min - P_{H,k}`.
    pub c2: Vec<f64>,
    /// `Σ ||w_k||² - P_T`.
    pub c3: f64,
    pub c4: f64,
    /// `|θ_n| - π`.
    pub c5: Vec<f64>,
    /// `-ρ_k`.
    pub rho_lower: Vec<f64>,
    /// `ρ_k - 1`.
    pub rho_upper: Vec<f64>,
}

impl Residuals {
    /// Largest inequality residual (C1, C2, C3, C5 and the split range).
    pub fn max_inequality(&self) -> f64 {
        self.c1
            .iter()
            .chain(&self.c2)
            .chain(std::iter::once(&self.c3))
            .chain(&self.c5)
            .chain(&self.rho_lower)
            .chain(&self.rho_upper)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_inequality() <= tol && self.c4 <= tol
    }
}

pub fn constraint_residuals(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
) -> Result<Residuals> {
    sol.check_split()?;
    let links = prepared(cfg, channels, sol)?;
    Ok(residuals_from_links(cfg, sol, &links))
}

pub(crate) fn residuals_from_links(cfg: &SystemConfig, sol: &Solution, links: &Links) -> Residuals {
    let sinr = links.sinr(cfg, &sol.rho);
    let harvested = links.harvested(cfg, &sol.rho);
    Residuals {
        c1: sinr.iter().map(|s| cfg.gamma_min - s).collect(),
        c2: harvested.iter().map(|p| cfg.p_min - p).collect(),
        c3: sol.transmit_power() - cfg.p_t,
        c4: c4_violation(&cfg.reflection, &sol.v, sol.theta.as_slice()),
        c5: sol
            .theta
            .iter()
            .map(|t| t.abs() - std::f64::consts::PI)
            .collect(),
        rho_lower: sol.rho.iter().map(|r| -r).collect(),
        rho_upper: sol.rho.iter().map(|r| r - 1.0).collect(),
    }
}
