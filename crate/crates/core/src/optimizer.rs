//! Orchestration of the joint design: initialization, the alternating block
//! loop, the outer penalty loop on the amplitude coupling, and the two
//! fixed-surface baselines.
//!
//! Each inner iteration runs the blocks in the order auxiliaries, split
//! ratios, beamformers, reflection vector, phases. Every block ascends the
//! penalized objective `f_A - Γ·c4` of the current penalty stage.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamforming::{self, form_violation, link_violation, w_maps, ScaOptions};
use crate::error::{Error, Result};
use crate::fp::{self, tight_aux_from_links, AuxVars};
use crate::model::{
    effective_channels, metrics_from_links, residuals_from_links, CMatrix, CVector, ChannelSet,
    Links, Metrics, Residuals, Solution, SystemConfig, C64, RHO_FLOOR,
};
use crate::qcqp::{complex_stack, complex_unstack, minimize_max_violation};
use crate::reflection::{
    self, penalized_value, phase_objective, project_c4, ThetaSearch, THETA_GRID_POINTS,
};
use crate::surrogate::{assemble, constraint_scale, NormTerm};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Penalty weight of the first stage.
    pub gamma0: f64,
    /// Penalty growth per stage.
    pub gamma_factor: f64,
    /// Largest penalty weight tried.
    pub gamma_max: f64,
    /// Relative penalized-objective gain that ends an inner loop.
    pub inner_tol: f64,
    pub inner_cap: usize,
    /// Amplitude-coupling violation that ends the penalty loop.
    pub c4_tol: f64,
    /// Number of constraint-ramp levels, spread evenly over `(0, 1]`.
    pub ramp_stages: usize,
    pub w_sca: ScaOptions,
    pub v_sca: ScaOptions,
    /// Update the harvesting auxiliaries. With `false` they stay zero and the
    /// harvesting rate drops out of the reformulated objective.
    pub eh_aux: bool,
    /// Tangent rounds spent restoring feasibility at one constraint level.
    pub restoration_rounds: usize,
    /// Inner-iteration cap for the warm-up solves at intermediate ramp levels.
    pub ramp_inner_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gamma0: 1e-2,
            gamma_factor: 10.0,
            gamma_max: 1e6,
            inner_tol: 1e-5,
            inner_cap: 50,
            c4_tol: 1e-6,
            ramp_stages: 3,
            w_sca: ScaOptions::default(),
            v_sca: ScaOptions::default(),
            eh_aux: true,
            restoration_rounds: 30,
            ramp_inner_cap: 5,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_factor > 1.0) {
            return Err(Error::invalid("gamma_factor", "must exceed 1"));
        }
        if !(self.gamma0 > 0.0) || !(self.gamma_max >= self.gamma0) {
            return Err(Error::invalid("gamma0", "need 0 < gamma0 <= gamma_max"));
        }
        for (name, v) in [
            ("inner_tol", self.inner_tol),
            ("c4_tol", self.c4_tol),
            ("sca_tol", self.w_sca.tol),
            ("sca_tol", self.v_sca.tol),
            ("qcqp_tol", self.w_sca.barrier.tol),
            ("qcqp_tol", self.v_sca.barrier.tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.inner_cap == 0 || self.ramp_stages == 0 {
            return Err(Error::invalid(
                "inner_cap/ramp_stages",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Aux,
    Split,
    Beamformer,
    Reflection,
    Phase,
    /// Feasibility restoration at a ramp level or after projection.
    Restoration,
    /// Exact projection of the reflection vector onto the amplitude model.
    Projection,
}

#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// Penalty stage index; ramp stages and the final refinement use their
    /// own indices after the penalty stages.
    pub stage: usize,
    pub penalty: f64,
    /// Constraint-ramp level in `[0, 1]`.
    pub ramp: f64,
    pub inner: usize,
    pub block: Block,
    /// `f_A - Γ·c4` after the block.
    pub penalized: f64,
    /// `R^ID + λ̄·R^PH` after the block.
    pub objective: f64,
    pub c4: f64,
    /// Largest inequality residual against the full constraint levels.
    pub max_residual: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub inner_iterations: usize,
    /// Penalty stages run.
    pub outer_stages: usize,
    /// Ramp levels visited before the full constraint level.
    pub ramp_levels: Vec<f64>,
    pub restorations: usize,
    pub newton_steps: usize,
    pub failures: Vec<String>,
}

impl Trace {
    /// Records that belong to one stage, in order.
    pub fn stage(&self, stage: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    NonConvergedC4,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::NonConvergedC4 => "non_converged_c4",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(SolveStatus::Converged),
            "non_converged_c4" => Ok(SolveStatus::NonConvergedC4),
            "infeasible" => Ok(SolveStatus::Infeasible),
            other => Err(Error::invalid(
                "status",
                format!("unknown status `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Solution,
    pub metrics: Metrics,
    pub residuals: Residuals,
    pub aux: AuxVars,
    pub trace: Trace,
    pub status: SolveStatus,
}

/// Audit tolerance on the final inequality residuals.
pub const AUDIT_TOL: f64 = 1e-6;

/// Maximum-ratio beamformers on the effective channels with the full power
/// budget split evenly, mid split ratios, and uniformly random phases.
pub fn initialize<R: RngCore + ?Sized>(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    rng: &mut R,
) -> Result<Solution> {
    cfg.validate()?;
    channels.check(cfg)?;
    let theta = DVector::from_fn(cfg.n, |_, _| rng.random_range(-PI..=PI));
    let v = project_c4(&cfg.reflection, &theta);
    let w = mrt(cfg, channels, &v)?;
    Ok(Solution {
        w,
        v,
        theta,
        rho: vec![0.5; cfg.k],
    })
}

fn mrt(cfg: &SystemConfig, channels: &ChannelSet, v: &CVector) -> Result<Vec<CVector>> {
    let h = effective_channels(channels, v)?;
    let per_user = (cfg.p_t / cfg.k as f64).sqrt();
    let mut w: Vec<CVector> = h
        .iter()
        .map(|hk| {
            let norm = hk.norm();
            if norm > 0.0 {
                hk.map(|x| x.conj()) * C64::new(per_user / norm, 0.0)
            } else {
                let mut e = CVector::zeros(cfg.m);
                e[0] = C64::new(per_user, 0.0);
                e
            }
        })
        .collect();
    // rounding can leave the sum a hair above the budget
    loop {
        let power: f64 = w.iter().map(|x| x.norm_squared()).sum();
        if power <= cfg.p_t {
            break;
        }
        let shrink = (cfg.p_t / power).sqrt() * (1.0 - 1e-15);
        for wk in &mut w {
            *wk *= C64::new(shrink, 0.0);
        }
    }
    Ok(w)
}

/// Whether the reflection vector is optimized or held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Full,
    FixedSurface,
}

struct Run<'a> {
    cfg: &'a SystemConfig,
    channels: &'a ChannelSet,
    opts: &'a SolveOptions,
    trace: Trace,
    start: Instant,
    search: ThetaSearch<'a, crate::model::ReflectionModel>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a SystemConfig, channels: &'a ChannelSet, opts: &'a SolveOptions) -> Self {
        Self {
            cfg,
            channels,
            opts,
            trace: Trace::default(),
            start: Instant::now(),
            search: ThetaSearch::new(&cfg.reflection, THETA_GRID_POINTS),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        stage: usize,
        penalty: f64,
        ramp: f64,
        inner: usize,
        block: Block,
        level: &SystemConfig,
        sol: &Solution,
        aux: &AuxVars,
    ) -> Result<f64> {
        let links = Links::evaluate(self.channels, sol)?;
        let penalized = penalized_value(level, &links, sol, aux, penalty);
        let metrics = metrics_from_links(self.cfg, sol, &links);
        let residuals = residuals_from_links(self.cfg, sol, &links);
        self.trace.records.push(TraceRecord {
            stage,
            penalty,
            ramp,
            inner,
            block,
            penalized,
            objective: metrics.objective,
            c4: metrics.c4_violation,
            max_residual: residuals.max_inequality(),
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });
        Ok(penalized)
    }

    /// Alternating block ascent at one constraint level and penalty weight.
    #[allow(clippy::too_many_arguments)]
    fn alternate(
        &mut self,
        level: &SystemConfig,
        sol: &mut Solution,
        penalty: f64,
        mode: Mode,
        stage: usize,
        ramp: f64,
        cap: usize,
    ) -> Result<AuxVars> {
        let opts = self.opts;
        for inner in 0..cap {
            self.trace.inner_iterations += 1;
            let links = Links::evaluate(self.channels, sol)?;
            let aux = tight_aux_from_links(level, &links, &sol.rho, opts.eh_aux);
            let p_start = self.record(stage, penalty, ramp, inner, Block::Aux, level, sol, &aux)?;

            for k in 0..level.k {
                if let Ok((lo, hi)) = fp::split_interval(level, &links, k) {
                    let obj = fp::split_objective(level, &links, &aux, k);
                    let candidate = obj.maximize(lo, hi);
                    if obj.value(candidate) >= obj.value(sol.rho[k]) {
                        sol.rho[k] = candidate;
                    }
                }
            }
            self.record(stage, penalty, ramp, inner, Block::Split, level, sol, &aux)?;

            match beamforming::update_w(level, self.channels, sol, &aux, &opts.w_sca) {
                Ok((w, tr)) => {
                    self.trace.newton_steps += tr.newton_steps;
                    sol.w = w;
                }
                Err(e) => self.trace.failures.push(format!("beamformer block: {e}")),
            }
            self.record(
                stage,
                penalty,
                ramp,
                inner,
                Block::Beamformer,
                level,
                sol,
                &aux,
            )?;

            if mode == Mode::Full {
                match reflection::update_v(level, self.channels, sol, &aux, penalty, &opts.v_sca) {
                    Ok((v, tr)) => {
                        self.trace.newton_steps += tr.newton_steps;
                        sol.v = v;
                    }
                    Err(e) => self.trace.failures.push(format!("reflection block: {e}")),
                }
                self.record(
                    stage,
                    penalty,
                    ramp,
                    inner,
                    Block::Reflection,
                    level,
                    sol,
                    &aux,
                )?;

                let model = &level.reflection;
                for n in 0..level.n {
                    let candidate = self.search.best(sol.v[n]);
                    if phase_objective(model, sol.v[n], candidate)
                        >= phase_objective(model, sol.v[n], sol.theta[n])
                    {
                        sol.theta[n] = candidate;
                    }
                }
            }
            let block = if mode == Mode::Full {
                Block::Phase
            } else {
                Block::Beamformer
            };
            let p_end = if mode == Mode::Full {
                self.record(stage, penalty, ramp, inner, block, level, sol, &aux)?
            } else {
                self.trace.records.last().map_or(p_start, |r| r.penalized)
            };
            if (p_end - p_start).abs() <= opts.inner_tol * p_start.abs().max(1e-12) {
                break;
            }
        }
        let links = Links::evaluate(self.channels, sol)?;
        Ok(tight_aux_from_links(level, &links, &sol.rho, opts.eh_aux))
    }

    /// Moves `(ρ, w)` until the true constraints of `level` hold. Each round
    /// centers the split ratios in their feasible intervals and then minimizes
    /// the largest normalized surrogate violation over the beamformers, which
    /// can only lower the true violation.
    fn restore(
        &mut self,
        level: &SystemConfig,
        sol: &mut Solution,
        stage: usize,
        ramp: f64,
    ) -> Result<bool> {
        let h_eff = effective_channels(self.channels, &sol.v)?;
        let full = w_maps(&h_eff, level.m);
        let basis = full.active_basis();
        let reduced = full.restrict(&DVector::zeros(full.dim()), &basis);
        let lengths = vec![level.m; level.k];
        let zero_aux = AuxVars::zeros(level.k);
        let mut feasible = false;
        for _ in 0..self.opts.restoration_rounds {
            let links = Links::new(&h_eff, &sol.w);
            if link_violation(level, &links, &sol.rho, sol.transmit_power()) <= 0.0 {
                feasible = true;
                break;
            }
            self.trace.restorations += 1;
            for k in 0..level.k {
                if let Ok((lo, hi)) = fp::split_interval(level, &links, k) {
                    sol.rho[k] = (0.5 * (lo + hi)).max(RHO_FLOOR);
                }
            }
            let links = Links::new(&h_eff, &sol.w);
            if link_violation(level, &links, &sol.rho, sol.transmit_power()) <= 0.0 {
                feasible = true;
                break;
            }
            let y0 = basis.tr_mul(&complex_stack(&sol.w));
            let sub = assemble(
                level,
                &reduced,
                y0,
                &sol.rho,
                &zero_aux,
                &NormTerm::PowerBall(level.p_t),
            );
            let scales: Vec<f64> = sub
                .tags
                .iter()
                .map(|t| constraint_scale(level, &sol.rho, *t))
                .collect();
            let (y, _, steps) = minimize_max_violation(
                &sub.program,
                1e-3,
                Some(&scales),
                &self.opts.w_sca.barrier,
            )?;
            self.trace.newton_steps += steps;
            let candidate = complex_unstack(&(&basis * &y), &lengths);
            let old = form_violation(level, &links, &sol.rho, sol.transmit_power());
            let cand_links = Links::new(&h_eff, &candidate);
            let power: f64 = candidate.iter().map(|x| x.norm_squared()).sum();
            let new = form_violation(level, &cand_links, &sol.rho, power);
            if !(new < old) {
                break;
            }
            sol.w = candidate;
        }
        if !feasible {
            let links = Links::new(&h_eff, &sol.w);
            feasible = link_violation(level, &links, &sol.rho, sol.transmit_power()) <= 0.0;
        }
        let links = Links::evaluate(self.channels, sol)?;
        let aux = tight_aux_from_links(level, &links, &sol.rho, self.opts.eh_aux);
        self.record(stage, 0.0, ramp, 0, Block::Restoration, level, sol, &aux)?;
        Ok(feasible)
    }

    /// Walks the constraint ramp up to the full level. Returns `false` when
    /// the full level could not be made feasible.
    fn ramp(
        &mut self,
        sol: &mut Solution,
        mode: Mode,
        first_stage: usize,
    ) -> Result<(bool, usize)> {
        let cfg = self.cfg;
        let mut stage = first_stage;
        let links = Links::evaluate(self.channels, sol)?;
        if link_violation(cfg, &links, &sol.rho, sol.transmit_power()) <= 0.0 {
            return Ok((true, stage));
        }
        let levels = self.opts.ramp_stages;
        for j in 0..levels {
            let s = if levels == 1 {
                1.0
            } else {
                j as f64 / (levels - 1) as f64
            };
            self.trace.ramp_levels.push(s);
            let level = SystemConfig {
                gamma_min: cfg.gamma_min * s,
                p_min: cfg.p_min * s,
                ..cfg.clone()
            };
            if !self.restore(&level, sol, stage, s)? {
                if s >= 1.0 {
                    return Ok((false, stage));
                }
                continue;
            }
            if s < 1.0 {
                self.alternate(
                    &level,
                    sol,
                    self.opts.gamma0,
                    mode,
                    stage,
                    s,
                    self.opts.ramp_inner_cap,
                )?;
                stage += 1;
            }
        }
        Ok((true, stage))
    }

    fn finish(self, sol: Solution, aux: AuxVars, mut status: SolveStatus) -> Result<SolveReport> {
        let links = Links::evaluate(self.channels, &sol)?;
        let metrics = metrics_from_links(self.cfg, &sol, &links);
        let residuals = residuals_from_links(self.cfg, &sol, &links);
        if status != SolveStatus::Infeasible && residuals.max_inequality() > AUDIT_TOL {
            status = SolveStatus::Infeasible;
        }
        Ok(SolveReport {
            solution: sol,
            metrics,
            residuals,
            aux,
            trace: self.trace,
            status,
        })
    }
}

/// One penalty stage of alternating block ascent from `sol` (which must be
/// feasible) at weight `penalty`. The reflection blocks are skipped when the
/// surface has no elements.
pub fn alternating_solve(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    sol: &Solution,
    penalty: f64,
    opts: &SolveOptions,
) -> Result<(Solution, AuxVars, Trace)> {
    cfg.validate()?;
    opts.validate()?;
    sol.check(cfg)?;
    sol.check_split()?;
    channels.check(cfg)?;
    let mode = if cfg.n == 0 {
        Mode::FixedSurface
    } else {
        Mode::Full
    };
    let mut run = Run::new(cfg, channels, opts);
    let mut work = sol.clone();
    let aux = run.alternate(cfg, &mut work, penalty, mode, 0, 1.0, opts.inner_cap)?;
    run.trace.outer_stages = 1;
    Ok((work, aux, run.trace))
}

/// Ramp and block ascent with the reflection vector held at `sol.v`.
fn fixed_surface_solve(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    mut sol: Solution,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let mut run = Run::new(cfg, channels, opts);
    let (feasible, stage) = run.ramp(&mut sol, Mode::FixedSurface, 0)?;
    if !feasible {
        let aux = AuxVars::zeros(cfg.k);
        return run.finish(sol, aux, SolveStatus::Infeasible);
    }
    let aux = run.alternate(
        cfg,
        &mut sol,
        0.0,
        Mode::FixedSurface,
        stage,
        1.0,
        opts.inner_cap,
    )?;
    run.trace.outer_stages = 1;
    run.finish(sol, aux, SolveStatus::Converged)
}

/// Full joint design: ramp to a feasible start, penalty stages with growing
/// weight until the amplitude coupling holds to `c4_tol`, exact projection
/// onto the amplitude model, and a final fixed-surface refinement.
pub fn penalty_solve<R: RngCore + ?Sized>(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<SolveReport> {
    cfg.validate()?;
    opts.validate()?;
    channels.check(cfg)?;
    let mut sol = initialize(cfg, channels, rng)?;
    if cfg.n == 0 {
        return fixed_surface_solve(cfg, channels, sol, opts);
    }

    let mut run = Run::new(cfg, channels, opts);
    let (feasible, mut stage) = run.ramp(&mut sol, Mode::Full, 0)?;
    if !feasible {
        let aux = AuxVars::zeros(cfg.k);
        return run.finish(sol, aux, SolveStatus::Infeasible);
    }

    let mut penalty = opts.gamma0;
    let mut status = SolveStatus::NonConvergedC4;
    loop {
        run.alternate(
            cfg,
            &mut sol,
            penalty,
            Mode::Full,
            stage,
            1.0,
            opts.inner_cap,
        )?;
        run.trace.outer_stages += 1;
        stage += 1;
        let c4 = crate::model::c4_violation(&cfg.reflection, &sol.v, sol.theta.as_slice());
        if c4 <= opts.c4_tol {
            status = SolveStatus::Converged;
            break;
        }
        penalty *= opts.gamma_factor;
        if penalty > opts.gamma_max {
            break;
        }
    }

    sol.v = project_c4(&cfg.reflection, &sol.theta);
    let zero = AuxVars::zeros(cfg.k);
    let projected = tight_aux_from_links(
        cfg,
        &Links::evaluate(channels, &sol)?,
        &sol.rho,
        opts.eh_aux,
    );
    run.record(stage, 0.0, 1.0, 0, Block::Projection, cfg, &sol, &projected)?;
    let links = Links::evaluate(channels, &sol)?;
    if link_violation(cfg, &links, &sol.rho, sol.transmit_power()) > 0.0
        && !run.restore(cfg, &mut sol, stage, 1.0)?
    {
        return run.finish(sol, zero, SolveStatus::Infeasible);
    }
    let aux = run.alternate(
        cfg,
        &mut sol,
        0.0,
        Mode::FixedSurface,
        stage,
        1.0,
        opts.inner_cap,
    )?;
    run.finish(sol, aux, status)
}

/// Design without the surface: the reflecting path is removed and only
/// `(ρ, w)` are optimized. The returned solution keeps the caller's surface
/// dimensions with `v = 0` and `θ = 0`; its metrics are those of the
/// surface-free system, so `c4_violation` is zero.
pub fn no_ris_baseline(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    cfg.validate()?;
    opts.validate()?;
    channels.check(cfg)?;
    let bare_cfg = SystemConfig {
        n: 0,
        ..cfg.clone()
    };
    let bare = ChannelSet::new(
        CMatrix::zeros(0, cfg.m),
        channels.h_d.clone(),
        vec![CVector::zeros(0); cfg.k],
    )?;
    // no phases are drawn without elements, so any generator gives the same start
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let start = initialize(&bare_cfg, &bare, &mut unused)?;
    let mut report = fixed_surface_solve(&bare_cfg, &bare, start, opts)?;
    report.solution.v = CVector::zeros(cfg.n);
    report.solution.theta = DVector::zeros(cfg.n);
    Ok(report)
}

/// Design with uniformly random phases held fixed and `v` set exactly from
/// them; only `(ρ, w)` are optimized.
pub fn random_phase_baseline<R: RngCore + ?Sized>(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    opts: &SolveOptions,
    rng: &mut R,
) -> Result<SolveReport> {
    cfg.validate()?;
    opts.validate()?;
    channels.check(cfg)?;
    let start = initialize(cfg, channels, rng)?;
    fixed_surface_solve(cfg, channels, start, opts)
}
