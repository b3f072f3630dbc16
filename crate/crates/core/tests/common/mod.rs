//! Shared helpers for the integration tests: random instances and naive
//! reference implementations written directly from the system equations,
//! without going through the library's evaluation code.

#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use ris_swipt::model::{CMatrix, CVector, ChannelSet, ReflectionModel, Solution, SystemConfig};

pub fn cgauss<R: RngCore + ?Sized>(rng: &mut R, scale: f64) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * (scale / std::f64::consts::SQRT_2)
}

pub fn random_model<R: RngCore + ?Sized>(rng: &mut R) -> ReflectionModel {
    ReflectionModel {
        f_min: rng.random_range(0.0..1.0),
        alpha: rng.random_range(0.2..3.0),
        phi: rng.random_range(0.0..std::f64::consts::TAU),
    }
}

/// Channels with i.i.d. complex Gaussian entries of the given standard
/// deviations.
pub fn random_channels<R: RngCore + ?Sized>(
    rng: &mut R,
    m: usize,
    k: usize,
    n: usize,
    direct: f64,
    reflect: f64,
) -> ChannelSet {
    let g = CMatrix::from_fn(n, m, |_, _| cgauss(rng, reflect));
    let h_d = (0..k)
        .map(|_| CVector::from_fn(m, |_, _| cgauss(rng, direct)))
        .collect();
    let h_r = (0..k)
        .map(|_| CVector::from_fn(n, |_, _| cgauss(rng, 1.0)))
        .collect();
    ChannelSet::new(g, h_d, h_r).expect("consistent random channels")
}

/// Random operating point: beamformers at full power, split ratios in
/// `(0.05, 0.95)`, phases uniform and `v` on the amplitude model.
pub fn random_solution<R: RngCore + ?Sized>(rng: &mut R, cfg: &SystemConfig) -> Solution {
    let mut w: Vec<CVector> = (0..cfg.k)
        .map(|_| CVector::from_fn(cfg.m, |_, _| cgauss(rng, 1.0)))
        .collect();
    let power: f64 = w.iter().map(|x| x.norm_squared()).sum();
    let scale = (cfg.p_t / power).sqrt() * rng.random_range(0.5..1.0);
    for x in &mut w {
        x.iter_mut().for_each(|z| *z *= scale);
    }
    let theta = DVector::from_fn(cfg.n, |_, _| {
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
    });
    let v = CVector::from_fn(cfg.n, |i, _| cfg.reflection.coefficient(theta[i]));
    Solution {
        w,
        v,
        theta,
        rho: (0..cfg.k).map(|_| rng.random_range(0.05..0.95)).collect(),
    }
}

/// Random small scenario with unit-scale noise so that every term of the
/// objective matters.
pub fn random_instance<R: RngCore + ?Sized>(
    rng: &mut R,
    m: usize,
    k: usize,
    n: usize,
) -> (SystemConfig, ChannelSet, Solution) {
    let cfg = SystemConfig {
        m,
        k,
        n,
        p_t: rng.random_range(1.0..10.0),
        sigma2: rng.random_range(0.05..0.5),
        delta2: rng.random_range(0.01..0.2),
        eta: rng.random_range(0.3..0.9),
        xi: rng.random_range(0.2..1.0),
        lambda_bar: rng.random_range(0.0..1.5),
        gamma_min: 1.0,
        p_min: 0.0,
        reflection: random_model(rng),
    };
    let channels = random_channels(rng, m, k, n, 1.0, 0.5);
    let sol = random_solution(rng, &cfg);
    (cfg, channels, sol)
}

/// `h_k = h_d,k + vᴴ diag(h_r,k) G` by explicit loops.
pub fn naive_effective(channels: &ChannelSet, v: &CVector, k: usize) -> Vec<C64> {
    let m = channels.h_d[k].len();
    let n = v.len();
    (0..m)
        .map(|col| {
            let mut acc = channels.h_d[k][col];
            for e in 0..n {
                acc += v[e].conj() * channels.h_r[k][e] * channels.g[(e, col)];
            }
            acc
        })
        .collect()
}

/// `|h_k w_i|²` for all pairs.
pub fn naive_gains(channels: &ChannelSet, sol: &Solution) -> Vec<Vec<f64>> {
    let k_users = sol.w.len();
    (0..k_users)
        .map(|k| {
            let h = naive_effective(channels, &sol.v, k);
            (0..k_users)
                .map(|i| {
                    let mut z = C64::new(0.0, 0.0);
                    for (hm, wm) in h.iter().zip(sol.w[i].iter()) {
                        z += hm * wm;
                    }
                    z.norm_sqr()
                })
                .collect()
        })
        .collect()
}

pub struct NaiveMetrics {
    pub sinr: Vec<f64>,
    pub eh_snr: Vec<f64>,
    pub harvested: Vec<f64>,
    pub rate_id: f64,
    pub rate_ph: f64,
    pub objective: f64,
}

pub fn naive_metrics(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution) -> NaiveMetrics {
    let gains = naive_gains(channels, sol);
    let mut out = NaiveMetrics {
        sinr: vec![],
        eh_snr: vec![],
        harvested: vec![],
        rate_id: 0.0,
        rate_ph: 0.0,
        objective: 0.0,
    };
    for (k, row) in gains.iter().enumerate() {
        let total: f64 = row.iter().sum();
        let interference = total - row[k];
        let rho = sol.rho[k];
        let sinr = rho * row[k] / (rho * (interference + cfg.sigma2) + cfg.delta2);
        let snr = cfg.xi * cfg.eta * (1.0 - rho) * total / cfg.sigma2;
        out.sinr.push(sinr);
        out.eh_snr.push(snr);
        out.harvested.push(cfg.eta * (1.0 - rho) * total);
        out.rate_id += (1.0 + sinr).log2();
        out.rate_ph += (1.0 + snr).log2();
    }
    out.objective = out.rate_id + cfg.lambda_bar * out.rate_ph;
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
