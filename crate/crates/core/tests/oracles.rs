//! Reference checks of every module against independent oracles: naive loop
//! evaluations, hand-solved optima, dense grids and Monte-Carlo moments.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_swipt::beamforming::{build_w_subproblem, update_w, ConstraintTag, ScaOptions};
use ris_swipt::channels::{path_loss, sample_channels_from_seed, AngleMode, GeometryConfig};
use ris_swipt::fp::{
    f_a_value, rho_feasible_interval, tight_aux, update_aux_eh, update_aux_id, update_rho, AuxVars,
    SplitObjective,
};
use ris_swipt::model::{
    constraint_residuals, effective_channels, evaluate, harvested_power, rate_ph, sinr,
    sum_rate_id, weighted_objective, CVector, ChannelSet, ReflectionModel, Solution, SystemConfig,
    RHO_FLOOR,
};
use ris_swipt::optimizer::{
    alternating_solve, initialize, no_ris_baseline, penalty_solve, random_phase_baseline,
    SolveOptions, SolveStatus,
};
use ris_swipt::qcqp::{complex_unstack, solve, ConvexQuadraticProgram, QcqpStatus, QuadraticForm};
use ris_swipt::reflection::{
    build_v_subproblem, optimal_theta, phase_objective, project_c4, update_v,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lowers the SINR target and harvesting floor to half of what the point
/// achieves, so that the point is strictly feasible.
fn make_feasible(cfg: &mut SystemConfig, channels: &ChannelSet, sol: &Solution) {
    let naive = naive_metrics(cfg, channels, sol);
    cfg.gamma_min = 0.5 * naive.sinr.iter().copied().fold(f64::INFINITY, f64::min);
    cfg.p_min = 0.5
        * naive
            .harvested
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
}

// ---------------------------------------------------------------- model

#[test]
fn effective_channels_match_triple_loop() {
    let mut r = rng(1);
    for _ in 0..20 {
        let (m, k, n) = (
            r.random_range(1..=8),
            r.random_range(1..=4),
            r.random_range(0..=16),
        );
        let (_, channels, sol) = random_instance(&mut r, m, k, n);
        let h = effective_channels(&channels, &sol.v).unwrap();
        for (user, hk) in h.iter().enumerate() {
            let naive = naive_effective(&channels, &sol.v, user);
            for (a, b) in hk.iter().zip(&naive) {
                assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }
    }
}

#[test]
fn metrics_match_naive_formulas() {
    let mut r = rng(2);
    for _ in 0..50 {
        let (m, k, n) = (
            r.random_range(1..=8),
            r.random_range(1..=4),
            r.random_range(0..=16),
        );
        let (cfg, channels, sol) = random_instance(&mut r, m, k, n);
        let naive = naive_metrics(&cfg, &channels, &sol);
        let got = evaluate(&cfg, &channels, &sol).unwrap();
        for (a, b) in got.sinr.iter().zip(&naive.sinr) {
            assert!(rel_close(*a, *b, 1e-10));
        }
        for (a, b) in got.p_harv.iter().zip(&naive.harvested) {
            assert!(rel_close(*a, *b, 1e-10));
        }
        assert!(rel_close(got.rate_id, naive.rate_id, 1e-10));
        assert!(rel_close(got.rate_ph, naive.rate_ph, 1e-10));
        assert!(rel_close(got.objective, naive.objective, 1e-10));
        assert!(rel_close(
            sum_rate_id(&cfg, &channels, &sol).unwrap(),
            naive.rate_id,
            1e-10
        ));
        assert!(rel_close(
            rate_ph(&cfg, &channels, &sol).unwrap(),
            naive.rate_ph,
            1e-10
        ));
        assert!(rel_close(
            weighted_objective(&cfg, &channels, &sol).unwrap(),
            naive.objective,
            1e-10
        ));
        let s = sinr(&cfg, &channels, &sol).unwrap();
        assert_eq!(s, got.sinr);
        assert_eq!(harvested_power(&cfg, &channels, &sol).unwrap(), got.p_harv);
        assert_eq!(got.objective, got.rate_id + cfg.lambda_bar * got.rate_ph);
    }
}

#[test]
fn scaling_beamformers_scales_harvest_and_raises_single_user_sinr() {
    let mut r = rng(3);
    for _ in 0..10 {
        let (cfg, channels, sol) = random_instance(&mut r, 3, 1, 5);
        let before = evaluate(&cfg, &channels, &sol).unwrap();
        let mut scaled = sol.clone();
        scaled.w[0] *= C64::new(1.5, 0.0);
        let after = evaluate(&cfg, &channels, &scaled).unwrap();
        assert!(rel_close(after.p_harv[0], 2.25 * before.p_harv[0], 1e-12));
        assert!(after.sinr[0] > before.sinr[0]);
    }
}

#[test]
fn projected_point_has_zero_coupling_residual() {
    let mut r = rng(4);
    let (cfg, channels, mut sol) = random_instance(&mut r, 2, 2, 6);
    sol.v = project_c4(&cfg.reflection, &sol.theta);
    assert_eq!(constraint_residuals(&cfg, &channels, &sol).unwrap().c4, 0.0);
}

// ---------------------------------------------------------------- channels

fn pinned_geometry(eps_db: f64) -> GeometryConfig {
    GeometryConfig {
        ue_radius: 1e-9,
        rician_eps_db: eps_db,
        ..GeometryConfig::default()
    }
}

fn tiny_cfg() -> SystemConfig {
    SystemConfig {
        m: 1,
        k: 1,
        n: 1,
        ..SystemConfig::reference()
    }
}

#[test]
fn fading_has_unit_mean_power_per_link() {
    let geo = pinned_geometry(5.0);
    let cfg = tiny_cfg();
    let l_g = path_loss(5.0, geo.pathloss_ris, &geo).unwrap();
    let l_d = path_loss(50f64.sqrt(), geo.pathloss_direct, &geo).unwrap();
    let l_r = path_loss(5.0, geo.pathloss_ris, &geo).unwrap();
    let draws = 100_000;
    let (mut sg, mut sd, mut sr) = (0.0, 0.0, 0.0);
    for seed in 0..draws {
        let ch = sample_channels_from_seed(&cfg, &geo, seed).unwrap();
        sg += ch.g[(0, 0)].norm_sqr() / l_g;
        sd += ch.h_d[0][0].norm_sqr() / l_d;
        sr += ch.h_r[0][0].norm_sqr() / l_r;
    }
    for mean in [sg, sd, sr].map(|s| s / draws as f64) {
        assert!((mean - 1.0).abs() < 0.01, "mean power {mean}");
    }
}

#[test]
fn strong_rician_limit_has_deterministic_moduli() {
    let geo = pinned_geometry(120.0);
    let cfg = SystemConfig {
        m: 4,
        k: 2,
        n: 6,
        ..SystemConfig::reference()
    };
    let ch = sample_channels_from_seed(&cfg, &geo, 9).unwrap();
    let sqrt_lg = path_loss(5.0, geo.pathloss_ris, &geo).unwrap().sqrt();
    let sqrt_ld = path_loss(50f64.sqrt(), geo.pathloss_direct, &geo)
        .unwrap()
        .sqrt();
    assert!(ch
        .g
        .iter()
        .all(|z| ((z.norm() - sqrt_lg) / sqrt_lg).abs() < 1e-3));
    for hd in &ch.h_d {
        assert!(hd
            .iter()
            .all(|z| ((z.norm() - sqrt_ld) / sqrt_ld).abs() < 1e-3));
    }
}

#[test]
fn channel_draws_are_deterministic_and_nested() {
    let geo = GeometryConfig {
        angle_mode: AngleMode::Geometric,
        ..GeometryConfig::default()
    };
    let small = SystemConfig {
        n: 10,
        k: 2,
        ..SystemConfig::reference()
    };
    let large = SystemConfig {
        n: 20,
        k: 3,
        ..SystemConfig::reference()
    };
    let a = sample_channels_from_seed(&small, &geo, 77).unwrap();
    assert_eq!(a, sample_channels_from_seed(&small, &geo, 77).unwrap());
    let b = sample_channels_from_seed(&large, &geo, 77).unwrap();
    // common draws across sizes: smaller sets are prefixes of larger ones
    assert_eq!(a.h_d[1], b.h_d[1]);
    assert_eq!(a.h_r[0].rows(0, 10), b.h_r[0].rows(0, 10));
    assert_eq!(a.g.rows(0, 10), b.g.rows(0, 10));
    assert_ne!(a, sample_channels_from_seed(&small, &geo, 78).unwrap());
}

// ---------------------------------------------------------------- fp

#[test]
fn random_auxiliaries_lower_bound_the_objective() {
    let mut r = rng(5);
    for _ in 0..200 {
        let (m, k) = (r.random_range(1..=4), r.random_range(1..=3));
        let (cfg, channels, sol) = random_instance(&mut r, m, k, 4);
        let k = cfg.k;
        let aux = AuxVars {
            alpha_i: (0..k).map(|_| r.random_range(0.0..20.0)).collect(),
            beta_i: (0..k).map(|_| cgauss(&mut r, 2.0)).collect(),
            alpha_e: (0..k).map(|_| r.random_range(0.0..20.0)).collect(),
            beta_e: (0..k)
                .map(|_| (0..k).map(|_| cgauss(&mut r, 2.0)).collect())
                .collect(),
        };
        let bound = f_a_value(&cfg, &channels, &sol, &aux).unwrap();
        let target = naive_metrics(&cfg, &channels, &sol).objective;
        assert!(bound <= target + 1e-9, "{bound} > {target}");
    }
}

#[test]
fn auxiliary_updates_never_decrease_fa() {
    let mut r = rng(6);
    for _ in 0..100 {
        let (cfg, channels, sol) = random_instance(&mut r, 3, 3, 5);
        let mut aux = AuxVars::zeros(cfg.k);
        aux.alpha_i = (0..cfg.k).map(|_| r.random_range(0.0..5.0)).collect();
        aux.alpha_e = (0..cfg.k).map(|_| r.random_range(0.0..5.0)).collect();
        let mut f = f_a_value(&cfg, &channels, &sol, &aux).unwrap();
        for _ in 0..5 {
            let (ai, bi) = update_aux_id(&cfg, &channels, &sol, &aux).unwrap();
            aux.alpha_i = ai;
            aux.beta_i = bi;
            let f_id = f_a_value(&cfg, &channels, &sol, &aux).unwrap();
            assert!(f_id >= f - 1e-9);
            let (ae, be) = update_aux_eh(&cfg, &channels, &sol, &aux).unwrap();
            aux.alpha_e = ae;
            aux.beta_e = be;
            let f_eh = f_a_value(&cfg, &channels, &sol, &aux).unwrap();
            assert!(f_eh >= f_id - 1e-9);
            f = f_eh;
        }
    }
}

#[test]
fn split_maximizer_matches_dense_grid() {
    let mut r = rng(7);
    let points = 1_000_000;
    for _ in 0..20 {
        let obj = SplitObjective {
            a: r.random_range(-2.0..2.0),
            b: r.random_range(-2.0..2.0),
            c: r.random_range(-2.0..2.0),
            d: r.random_range(-2.0..2.0),
        };
        let (lo, hi) = (RHO_FLOOR, 1.0);
        let (mut best_x, mut best_v) = (lo, f64::NEG_INFINITY);
        for i in 0..=points {
            let x = lo + (hi - lo) * i as f64 / points as f64;
            let v = obj.a * x.sqrt() + obj.b * (1.0 - x).sqrt() + obj.c * x + obj.d * (1.0 - x);
            if v > best_v {
                best_v = v;
                best_x = x;
            }
        }
        let rho = obj.maximize(lo, hi);
        assert!((lo..=hi).contains(&rho));
        assert!(obj.value(rho) >= best_v - 1e-12, "{obj:?}");
        assert!(
            (rho - best_x).abs() <= 1e-5 || (obj.value(rho) - best_v).abs() <= 1e-12,
            "{obj:?}"
        );
    }
}

#[test]
fn split_update_stays_in_interval_and_meets_sinr() {
    let mut r = rng(8);
    let mut checked = 0;
    for _ in 0..100 {
        let (mut cfg, channels, sol) = random_instance(&mut r, 3, 2, 4);
        make_feasible(&mut cfg, &channels, &sol);
        let aux = tight_aux(&cfg, &channels, &sol, true).unwrap();
        for k in 0..cfg.k {
            let (lo, hi) = rho_feasible_interval(&cfg, &channels, &sol, k).unwrap();
            let rho = update_rho(&cfg, &channels, &sol, &aux, k).unwrap();
            assert!(rho >= lo && rho <= hi);
            let mut moved = sol.clone();
            moved.rho[k] = rho;
            let naive = naive_metrics(&cfg, &channels, &moved);
            assert!(naive.sinr[k] >= cfg.gamma_min * (1.0 - 1e-9));
            assert!(naive.harvested[k] >= cfg.p_min * (1.0 - 1e-9));
            checked += 1;
        }
    }
    assert_eq!(checked, 200);
}

// ---------------------------------------------------------------- qcqp

fn random_psd<R: Rng>(r: &mut R, n: usize, floor: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(n, n) * floor
}

#[test]
fn two_dimensional_programs_match_dense_grid() {
    let mut r = rng(9);
    for _ in 0..10 {
        let objective = QuadraticForm {
            a: -random_psd(&mut r, 2, 0.05),
            b: DVector::from_fn(2, |_, _| r.random_range(-2.0..2.0)),
            c: 0.0,
        };
        let constraints: Vec<QuadraticForm> = (0..2)
            .map(|_| QuadraticForm {
                a: random_psd(&mut r, 2, 0.2),
                b: DVector::from_fn(2, |_, _| r.random_range(-0.3..0.3)),
                c: -r.random_range(0.3..1.0),
            })
            .collect();
        let prob = ConvexQuadraticProgram {
            objective,
            constraints,
            x0: DVector::zeros(2),
        };
        let sol = solve(&prob, 1e-9).unwrap();
        assert_eq!(sol.status, QcqpStatus::Converged);
        assert!(prob.constraint_values(&sol.x).iter().all(|g| *g <= 1e-8));
        assert!(sol
            .stage_objectives
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12));
        // every constraint set lies in the box [-3, 3]² for these draws
        let best = zoom_grid(&prob, [0.0, 0.0], 3.0);
        assert!(sol.objective_value >= best - 1e-9);
        assert!(
            sol.objective_value - best <= 1e-6,
            "{} vs grid {best}",
            sol.objective_value
        );
    }
}

/// Best feasible grid value, re-gridding around the incumbent with a shrinking
/// window.
fn zoom_grid(prob: &ConvexQuadraticProgram, center: [f64; 2], half_width: f64) -> f64 {
    let n = 201;
    let (mut c, mut hw) = (center, half_width);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..60 {
        let step = 2.0 * hw / (n - 1) as f64;
        let mut arg = c;
        for i in 0..n {
            for j in 0..n {
                let p = [c[0] - hw + step * i as f64, c[1] - hw + step * j as f64];
                let x = DVector::from_column_slice(&p);
                if prob.constraints.iter().all(|g| g.value(&x) <= 0.0) {
                    let v = prob.objective.value(&x);
                    if v > best {
                        best = v;
                        arg = p;
                    }
                }
            }
        }
        c = arg;
        hw *= 0.5;
    }
    best
}

// ---------------------------------------------------------------- beamforming

/// Value of each true constraint in the difference form of its surrogate.
fn true_form(cfg: &SystemConfig, channels: &ChannelSet, sol: &Solution, tag: ConstraintTag) -> f64 {
    let gains = naive_gains(channels, sol);
    match tag {
        ConstraintTag::Sinr(k) => {
            let interference: f64 = gains[k]
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, g)| g)
                .sum();
            cfg.gamma_min * (interference + cfg.sigma2 + cfg.delta2 / sol.rho[k]) - gains[k][k]
        }
        ConstraintTag::Harvest(k) => {
            cfg.p_min - cfg.eta * (1.0 - sol.rho[k]) * gains[k].iter().sum::<f64>()
        }
        ConstraintTag::Power => sol.transmit_power() - cfg.p_t,
    }
}

#[test]
fn beamformer_surrogate_is_exact_at_expansion_and_conservative_elsewhere() {
    let mut r = rng(10);
    for _ in 0..5 {
        let (mut cfg, channels, sol) = random_instance(&mut r, 4, 3, 6);
        make_feasible(&mut cfg, &channels, &sol);
        let aux = tight_aux(&cfg, &channels, &sol, true).unwrap();
        let sub = build_w_subproblem(&cfg, &channels, &sol, &aux).unwrap();
        let lengths = vec![cfg.m; cfg.k];
        for (g, tag) in sub.program.constraints.iter().zip(&sub.tags) {
            let exact = true_form(&cfg, &channels, &sol, *tag);
            assert!((g.value(&sub.program.x0) - exact).abs() <= 1e-12 * (1.0 + g.c.abs()));
        }
        for _ in 0..1000 {
            let x = DVector::from_fn(sub.program.dim(), |_, _| cgauss(&mut r, 3.0).re);
            let mut moved = sol.clone();
            moved.w = complex_unstack(&x, &lengths);
            for (g, tag) in sub.program.constraints.iter().zip(&sub.tags) {
                let tol = 1e-9 * (1.0 + g.c.abs());
                assert!(g.value(&x) >= true_form(&cfg, &channels, &moved, *tag) - tol);
            }
        }
    }
}

#[test]
fn single_user_beamformer_is_matched_filter_when_ball_is_active() {
    let mut r = rng(11);
    for _ in 0..5 {
        let (mut cfg, channels, mut sol) = random_instance(&mut r, 4, 1, 3);
        cfg.gamma_min = 0.0;
        cfg.p_min = 0.0;
        cfg.lambda_bar = 0.0;
        sol.w[0] *= C64::new(0.5, 0.0);
        // a small β puts the unconstrained optimum far outside the power ball
        let beta = cgauss(&mut r, 1e-3);
        let aux = AuxVars {
            alpha_i: vec![0.0],
            beta_i: vec![beta],
            alpha_e: vec![0.0],
            beta_e: vec![vec![C64::new(0.0, 0.0)]],
        };
        let sub = build_w_subproblem(&cfg, &channels, &sol, &aux).unwrap();
        let out = solve(&sub.program, 1e-10).unwrap();
        let w = complex_unstack(&out.x, &[cfg.m]).remove(0);
        let h = &effective_channels(&channels, &sol.v).unwrap()[0];
        let hw: C64 = h.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        assert!((w.norm_squared() - cfg.p_t).abs() <= 1e-6 * cfg.p_t);
        assert!((hw.norm() / (h.norm() * w.norm()) - 1.0).abs() < 1e-6);
        // the link amplitude lines up with β
        assert!((hw.arg() - beta.arg()).sin().abs() < 1e-6);
    }
}

#[test]
fn beamformer_sca_ascends_and_stays_feasible() {
    let mut r = rng(12);
    for _ in 0..5 {
        let (mut cfg, channels, sol) = random_instance(&mut r, 4, 2, 6);
        make_feasible(&mut cfg, &channels, &sol);
        let aux = tight_aux(&cfg, &channels, &sol, true).unwrap();
        let opts = ScaOptions::default();
        let (w, trace) = update_w(&cfg, &channels, &sol, &aux, &opts).unwrap();
        assert!(trace.objective.windows(2).all(|p| p[1] >= p[0] - 1e-9));
        let mut out = sol.clone();
        out.w = w;
        let res = constraint_residuals(&cfg, &channels, &out).unwrap();
        assert!(res.c1.iter().all(|x| *x <= 1e-8 * cfg.gamma_min.max(1.0)));
        assert!(res.c2.iter().all(|x| *x <= 1e-8));
        assert!(res.c3 <= 1e-8 * cfg.p_t);

        // from a converged point the loop stops after one surrogate solve
        let converged = (0..20).try_fold(out.clone(), |cur, _| {
            let (w, t) = update_w(&cfg, &channels, &cur, &aux, &opts).unwrap();
            let next = Solution { w, ..cur };
            if t.iterations <= 1 {
                Err(next)
            } else {
                Ok(next)
            }
        });
        assert!(converged.is_err(), "SCA did not settle");
    }
}

// ---------------------------------------------------------------- reflection

#[test]
fn phase_search_beats_random_samples() {
    let mut r = rng(13);
    let model = ReflectionModel::default();
    for _ in 0..1000 {
        let v = cgauss(&mut r, 1.0);
        let t = optimal_theta(&model, v);
        assert!((-std::f64::consts::PI..=std::f64::consts::PI).contains(&t));
        let best = phase_objective(&model, v, t);
        for _ in 0..1000 {
            let s = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            assert!(best >= phase_objective(&model, v, s) - 1e-12);
        }
    }
}

#[test]
fn projection_round_trip() {
    let mut r = rng(14);
    for _ in 0..50 {
        let model = random_model(&mut r);
        let theta = DVector::from_fn(8, |_, _| r.random_range(-3.1..3.1));
        let v = project_c4(&model, &theta);
        for (z, t) in v.iter().zip(theta.iter()) {
            let f = model.f_min
                + (1.0 - model.f_min) * (((t - model.phi).sin() + 1.0) / 2.0).powf(model.alpha);
            assert!((z.norm() - f).abs() < 1e-12);
            assert!(z.norm() >= model.f_min - 1e-15 && z.norm() <= 1.0 + 1e-15);
            assert!((z.arg() - t).abs() < 1e-12);
        }
    }
}

/// Single element, single user, no harvesting: the penalized objective is a
/// concave quadratic in `u = conj(v)` whose stationary point solves a 2×2
/// linear system.
#[test]
fn single_element_reflection_matches_hand_solution() {
    let mut r = rng(15);
    for _ in 0..10 {
        let (mut cfg, channels, mut sol) = random_instance(&mut r, 2, 1, 1);
        cfg.lambda_bar = 0.0;
        cfg.gamma_min = 1e-9;
        cfg.p_min = 0.0;
        cfg.reflection = ReflectionModel::ideal();
        let penalty = r.random_range(0.1..2.0);
        let alpha = r.random_range(0.0..3.0);
        let beta = cgauss(&mut r, 1.0);
        let rho = sol.rho[0];
        let d: C64 = channels.h_d[0]
            .iter()
            .zip(sol.w[0].iter())
            .map(|(a, b)| a * b)
            .sum();
        let a: C64 = (0..cfg.m)
            .map(|m| channels.h_r[0][0] * channels.g[(0, m)] * sol.w[0][m])
            .sum();
        let center = cfg.reflection.coefficient(sol.theta[0]);
        let s = (rho * (1.0 + alpha)).sqrt();
        let q = beta.norm_sqr() * rho;
        // the lower bound is measured in bits, so in nats the penalty weighs Γ·ln 2;
        // ∂/∂ū: sβā - qā(d + a u) - Γ ln2 (u - c̄) = 0
        let g = penalty * std::f64::consts::LN_2;
        let u =
            (s * beta * a.conj() - q * a.conj() * d + g * center.conj()) / (q * a.norm_sqr() + g);
        let v_star = u.conj();

        sol.v = CVector::from_element(1, v_star + cgauss(&mut r, 1e-2));
        let aux = AuxVars {
            alpha_i: vec![alpha],
            beta_i: vec![beta],
            alpha_e: vec![0.0],
            beta_e: vec![vec![C64::new(0.0, 0.0)]],
        };
        let sub = build_v_subproblem(&cfg, &channels, &sol, &aux, penalty).unwrap();
        let out = solve(&sub.program, 1e-12).unwrap();
        let v = C64::new(out.x[0], out.x[1]);
        assert!(
            (v - v_star).norm() <= 1e-6 * (1.0 + v_star.norm()),
            "{v} vs {v_star}"
        );
    }
}

#[test]
fn large_penalty_pulls_reflection_onto_model_at_rate_one_over_gamma() {
    let mut r = rng(16);
    let (mut cfg, channels, sol) = random_instance(&mut r, 2, 1, 1);
    cfg.reflection = ReflectionModel::ideal();
    cfg.gamma_min = 1e-9;
    cfg.p_min = 0.0;
    let aux = tight_aux(&cfg, &channels, &sol, true).unwrap();
    let target = cfg.reflection.coefficient(sol.theta[0]);
    let dist: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&gamma| {
            let sub = build_v_subproblem(&cfg, &channels, &sol, &aux, gamma).unwrap();
            let out = solve(&sub.program, 1e-12).unwrap();
            (C64::new(out.x[0], out.x[1]) - target).norm()
        })
        .collect();
    assert!(dist[2] < 1e-3);
    for w in dist.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10.0).abs() < 0.5, "{dist:?}");
    }
}

#[test]
fn reflection_sca_ascends_and_stays_feasible() {
    let mut r = rng(17);
    for _ in 0..5 {
        let (mut cfg, channels, sol) = random_instance(&mut r, 3, 2, 8);
        make_feasible(&mut cfg, &channels, &sol);
        let aux = tight_aux(&cfg, &channels, &sol, true).unwrap();
        let (v, trace) =
            update_v(&cfg, &channels, &sol, &aux, 0.5, &ScaOptions::default()).unwrap();
        assert!(trace.objective.windows(2).all(|p| p[1] >= p[0] - 1e-9));
        let out = Solution { v, ..sol.clone() };
        let res = constraint_residuals(&cfg, &channels, &out).unwrap();
        assert!(res.c1.iter().all(|x| *x <= 1e-8 * cfg.gamma_min.max(1.0)));
        assert!(res.c2.iter().all(|x| *x <= 1e-8));
    }
}

// ---------------------------------------------------------------- optimizer

#[test]
fn unconstrained_start_is_feasible_at_full_power() {
    let mut r = rng(18);
    let cfg = SystemConfig {
        gamma_min: 0.0,
        p_min: 0.0,
        n: 12,
        ..SystemConfig::reference()
    };
    let channels = sample_channels_from_seed(&cfg, &GeometryConfig::default(), 5).unwrap();
    let sol = initialize(&cfg, &channels, &mut r).unwrap();
    let res = constraint_residuals(&cfg, &channels, &sol).unwrap();
    assert!(res.max_inequality() <= 0.0);
    assert_eq!(res.c4, 0.0);
    assert!((sol.transmit_power() - cfg.p_t).abs() <= 1e-9 * cfg.p_t);
}

fn small_scenario(seed: u64) -> (SystemConfig, ChannelSet) {
    let cfg = SystemConfig {
        m: 4,
        k: 2,
        n: 8,
        ..SystemConfig::reference()
    };
    let channels = sample_channels_from_seed(&cfg, &GeometryConfig::default(), seed).unwrap();
    (cfg, channels)
}

#[test]
fn alternating_stage_is_monotone_and_settles() {
    let (cfg, channels) = small_scenario(21);
    let opts = SolveOptions::default();
    let report = penalty_solve(&cfg, &channels, &opts, &mut rng(21)).unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    let start = Solution {
        v: project_c4(&cfg.reflection, &report.solution.theta),
        ..report.solution.clone()
    };
    let (out, _, trace) = alternating_solve(&cfg, &channels, &start, 1.0, &opts).unwrap();
    let values: Vec<f64> = trace.records.iter().map(|r| r.penalized).collect();
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 1e-7 * w[0].abs(), "{values:?}");
    }
    // from its own fixed point a second stage ends after one pass
    let (_, _, again) = alternating_solve(&cfg, &channels, &out, 1.0, &opts).unwrap();
    assert_eq!(again.inner_iterations, 1);
}

#[test]
fn harvesting_blocks_do_not_matter_without_harvest_weight() {
    let (mut cfg, channels) = small_scenario(22);
    cfg.lambda_bar = 0.0;
    let with = penalty_solve(&cfg, &channels, &SolveOptions::default(), &mut rng(1)).unwrap();
    let opts = SolveOptions {
        eh_aux: false,
        ..SolveOptions::default()
    };
    let without = penalty_solve(&cfg, &channels, &opts, &mut rng(1)).unwrap();
    assert!((with.metrics.rate_id - without.metrics.rate_id).abs() < 1e-6);
}

#[test]
fn empty_surface_solve_equals_no_surface_baseline() {
    let (cfg, channels) = small_scenario(23);
    let bare = SystemConfig {
        n: 0,
        ..cfg.clone()
    };
    let bare_channels = ChannelSet::new(
        ris_swipt::model::CMatrix::zeros(0, cfg.m),
        channels.h_d.clone(),
        vec![CVector::zeros(0); cfg.k],
    )
    .unwrap();
    let full = penalty_solve(&bare, &bare_channels, &SolveOptions::default(), &mut rng(3)).unwrap();
    let base = no_ris_baseline(&cfg, &channels, &SolveOptions::default()).unwrap();
    assert!((full.metrics.objective - base.metrics.objective).abs() <= 1e-8);
    assert!((full.metrics.rate_id - base.metrics.rate_id).abs() <= 1e-8);
    assert!((full.metrics.rate_ph - base.metrics.rate_ph).abs() <= 1e-8);
    assert!(base.solution.v.iter().all(|z| *z == C64::new(0.0, 0.0)));
}

#[test]
fn reference_scenario_converges_above_its_start() {
    let cfg = SystemConfig::reference();
    let channels = sample_channels_from_seed(&cfg, &GeometryConfig::default(), 42).unwrap();
    let start = initialize(&cfg, &channels, &mut rng(42)).unwrap();
    let start_obj = evaluate(&cfg, &channels, &start).unwrap().objective;
    let report = penalty_solve(&cfg, &channels, &SolveOptions::default(), &mut rng(42)).unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    assert!(report.residuals.max_inequality() <= 1e-6);
    assert_eq!(report.metrics.c4_violation, 0.0);
    assert!(report.solution.transmit_power() <= cfg.p_t + 1e-9);
    assert!(report.metrics.objective >= start_obj);
    assert!(report.trace.ramp_levels.len() <= 3);
}

#[test]
fn baselines_are_audited_and_dominated_on_average() {
    let cfg = SystemConfig {
        m: 4,
        k: 2,
        n: 16,
        ..SystemConfig::reference()
    };
    let opts = SolveOptions::default();
    let drops = 20;
    let (mut full, mut none, mut random) = (0.0, 0.0, 0.0);
    for seed in 0..drops {
        let channels =
            sample_channels_from_seed(&cfg, &GeometryConfig::default(), 1000 + seed).unwrap();
        let f = penalty_solve(&cfg, &channels, &opts, &mut rng(seed)).unwrap();
        let n = no_ris_baseline(&cfg, &channels, &opts).unwrap();
        let p = random_phase_baseline(&cfg, &channels, &opts, &mut rng(seed)).unwrap();
        for rep in [&f, &n, &p] {
            assert!(
                rep.status == SolveStatus::Infeasible || rep.residuals.max_inequality() <= 1e-6
            );
        }
        assert_eq!(p.metrics.c4_violation, 0.0);
        full += f.metrics.objective;
        none += n.metrics.objective;
        random += p.metrics.objective;
    }
    assert!(full > none, "full {full} vs no surface {none}");
    assert!(full > random, "full {full} vs random phases {random}");
}
