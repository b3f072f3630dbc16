//! Scenario geometry and Rician channel sampling.
//!
//! Every link is `√L · (√(ε/(1+ε)) · LOS + √(1/(1+ε)) · NLOS)` with a
//! log-distance path loss `L`, a uniform-linear-array line-of-sight term and
//! unit-variance circularly-symmetric Gaussian scattering.
//!
//! Each link draws from its own ChaCha stream keyed by the drop seed, so a
//! scenario with more users or more elements extends a smaller one drawn with
//! the same seed instead of reshuffling it.

use std::f64::consts::PI;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{CMatrix, CVector, ChannelSet, SystemConfig, C64};

/// How line-of-sight departure/arrival angles are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleMode {
    /// Uniform in `[-π/2, π/2]`, independently per link and drop.
    Random,
    /// Taken from the link direction, measured from the array broadside (the
    /// y axis) and folded into `[-π/2, π/2]`.
    Geometric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub ue_center: [f64; 2],
    pub ue_radius: f64,
    pub pathloss_ris: f64,
    pub pathloss_direct: f64,
    pub c0_db: f64,
    pub d0: f64,
    pub rician_eps_db: f64,
    pub d_over_lambda: f64,
    pub angle_mode: AngleMode,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            bs_pos: [0.0, 0.0],
            ris_pos: [0.0, 5.0],
            ue_center: [5.0, 5.0],
            ue_radius: 1.0,
            pathloss_ris: 2.2,
            pathloss_direct: 3.6,
            c0_db: -30.0,
            d0: 1.0,
            rician_eps_db: 5.0,
            d_over_lambda: 0.5,
            angle_mode: AngleMode::Random,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ue_radius > 0.0) {
            return Err(Error::invalid("ue_radius", "must be positive"));
        }
        if !(self.d0 > 0.0) {
            return Err(Error::invalid("d0", "must be positive"));
        }
        if !(self.pathloss_ris > 0.0) {
            return Err(Error::invalid("pathloss_ris", "must be positive"));
        }
        if !(self.pathloss_direct > 0.0) {
            return Err(Error::invalid("pathloss_direct", "must be positive"));
        }
        if !(self.d_over_lambda > 0.0) {
            return Err(Error::invalid("d_over_lambda", "must be positive"));
        }
        if distance(self.bs_pos, self.ris_pos) <= 0.0 {
            return Err(Error::invalid("ris_pos", "coincides with the base station"));
        }
        Ok(())
    }

    pub fn rician_factor(&self) -> f64 {
        db_to_linear(self.rician_eps_db)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Uniform-linear-array response, element `m` = `exp(j 2π (d/λ) m sin(angle))`.
pub fn steering_vector(n: usize, angle: f64, d_over_lambda: f64) -> Result<CVector> {
    if n == 0 {
        return Err(Error::invalid(
            "n",
            "steering vector needs at least one element",
        ));
    }
    let step = 2.0 * PI * d_over_lambda * angle.sin();
    Ok(CVector::from_fn(n, |m, _| {
        C64::from_polar(1.0, step * m as f64)
    }))
}

/// Linear power gain `10^(C0/10) · (d/d0)^(-exponent)`.
pub fn path_loss(dist: f64, exponent: f64, geo: &GeometryConfig) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::invalid("dist", "link distance must be positive"));
    }
    Ok(db_to_linear(geo.c0_db) * (dist / geo.d0).powf(-exponent))
}

// Stream layout: 0 = BS->surface, then three streams per user.
const STREAM_G: u64 = 0;
const STREAM_POS: u64 = 1;
const STREAM_DIRECT: u64 = 2;
const STREAM_REFLECT: u64 = 3;

fn user_stream(user: usize, which: u64) -> u64 {
    1 + 3 * user as u64 + (which - 1)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-PI / 2.0..=PI / 2.0)
}

fn geometric_angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    // angle from broadside, folded onto the front half-plane
    let a = dx.atan2(dy);
    if a > PI / 2.0 {
        PI - a
    } else if a < -PI / 2.0 {
        -PI - a
    } else {
        a
    }
}

struct Rician {
    los: f64,
    nlos: f64,
}

impl Rician {
    fn new(geo: &GeometryConfig) -> Self {
        let eps = geo.rician_factor();
        Self {
            los: (eps / (1.0 + eps)).sqrt(),
            nlos: (1.0 / (1.0 + eps)).sqrt(),
        }
    }

    fn mix<R: Rng + ?Sized>(&self, los: C64, rng: &mut R) -> C64 {
        los * self.los + complex_normal(rng) * self.nlos
    }
}

/// Draws one channel realization. The generator supplies a single 64-bit drop
/// seed; the per-link streams are derived from it.
pub fn sample_channels<R: RngCore + ?Sized>(
    cfg: &SystemConfig,
    geo: &GeometryConfig,
    rng: &mut R,
) -> Result<ChannelSet> {
    sample_channels_from_seed(cfg, geo, rng.next_u64())
}

pub fn sample_channels_from_seed(
    cfg: &SystemConfig,
    geo: &GeometryConfig,
    seed: u64,
) -> Result<ChannelSet> {
    geo.validate()?;
    let (m, n, k) = (cfg.m, cfg.n, cfg.k);
    if m == 0 || k == 0 {
        return Err(Error::invalid(
            "m/k",
            "need at least one antenna and one user",
        ));
    }
    let rician = Rician::new(geo);
    let dl = geo.d_over_lambda;

    let mut rng_g = stream(seed, STREAM_G);
    let (aoa_g, aod_g) = match geo.angle_mode {
        AngleMode::Random => (random_angle(&mut rng_g), random_angle(&mut rng_g)),
        AngleMode::Geometric => (
            geometric_angle(geo.ris_pos, geo.bs_pos),
            geometric_angle(geo.bs_pos, geo.ris_pos),
        ),
    };
    let scale_g = path_loss(distance(geo.bs_pos, geo.ris_pos), geo.pathloss_ris, geo)?.sqrt();
    let a_m_g = steering_vector(m, aod_g, dl)?;
    let mut g = CMatrix::zeros(n, m);
    if n > 0 {
        let a_n_g = steering_vector(n, aoa_g, dl)?;
        for row in 0..n {
            for col in 0..m {
                let los = a_n_g[row] * a_m_g[col].conj();
                g[(row, col)] = rician.mix(los, &mut rng_g) * scale_g;
            }
        }
    }

    let mut h_d = Vec::with_capacity(k);
    let mut h_r = Vec::with_capacity(k);
    for user in 0..k {
        let mut rng_pos = stream(seed, user_stream(user, STREAM_POS));
        let radius = geo.ue_radius * rng_pos.random::<f64>().sqrt();
        let phase = 2.0 * PI * rng_pos.random::<f64>();
        let ue = [
            geo.ue_center[0] + radius * phase.cos(),
            geo.ue_center[1] + radius * phase.sin(),
        ];

        let mut rng_d = stream(seed, user_stream(user, STREAM_DIRECT));
        let aod_d = match geo.angle_mode {
            AngleMode::Random => random_angle(&mut rng_d),
            AngleMode::Geometric => geometric_angle(geo.bs_pos, ue),
        };
        let scale_d = path_loss(distance(geo.bs_pos, ue), geo.pathloss_direct, geo)?.sqrt();
        let a_d = steering_vector(m, aod_d, dl)?;
        h_d.push(CVector::from_fn(m, |col, _| {
            rician.mix(a_d[col].conj(), &mut rng_d) * scale_d
        }));

        let mut rng_r = stream(seed, user_stream(user, STREAM_REFLECT));
        let aod_r = match geo.angle_mode {
            AngleMode::Random => random_angle(&mut rng_r),
            AngleMode::Geometric => geometric_angle(geo.ris_pos, ue),
        };
        let scale_r = path_loss(distance(geo.ris_pos, ue), geo.pathloss_ris, geo)?.sqrt();
        let hr = if n == 0 {
            CVector::zeros(0)
        } else {
            let a_r = steering_vector(n, aod_r, dl)?;
            CVector::from_fn(n, |row, _| {
                rician.mix(a_r[row].conj(), &mut rng_r) * scale_r
            })
        };
        h_r.push(hr);
    }

    ChannelSet::new(g, h_d, h_r)
}
