//! Experiment plumbing: flat key=value configuration files, single runs of
//! all three designs on one channel draw, Monte-Carlo sweeps over one
//! parameter, and CSV / gnuplot output.
//!
//! # Result schema
//!
//! Every result row has the columns
//! `param, value, drop, seed, method, sum_rate_bpshz, rate_ph,
//! harvested_power_mw_total, objective, inner_iters, outer_stages,
//! c4_violation, max_residual, wall_ms, status`.
//! `method` is one of `full_ris`, `no_ris`, `random_phase`; `status` is one of
//! `converged`, `non_converged_c4`, `infeasible`. `max_residual` is the largest
//! inequality residual clipped at zero. `wall_ms` is zero unless timing is
//! requested, so that repeated sweeps are byte-identical.
//!
//! The aggregate file has one row per (value, method) with means over the
//! rows whose status is not `infeasible`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    db_to_linear, dbm_to_mw, sample_channels_from_seed, AngleMode, GeometryConfig,
};
use crate::error::{Error, Result};
use crate::model::{ChannelSet, SystemConfig};
use crate::optimizer::{
    no_ris_baseline, penalty_solve, random_phase_baseline, SolveOptions, SolveReport, SolveStatus,
};

/// Everything a configuration file describes.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub geometry: GeometryConfig,
    pub solve: SolveOptions,
}

impl RunConfig {
    /// Reference scenario with the default geometry and solver settings.
    pub fn reference() -> Self {
        Self {
            system: SystemConfig::reference(),
            geometry: GeometryConfig::default(),
            solve: SolveOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.geometry.validate()?;
        self.solve.validate()
    }
}

const REQUIRED_KEYS: [&str; 11] = [
    "m",
    "k",
    "n",
    "p_t_dbm",
    "sigma2_dbm",
    "delta2_dbm",
    "eta",
    "xi",
    "lambda_bar",
    "gamma_min_db",
    "p_min_mw",
];

const OPTIONAL_KEYS: [&str; 30] = [
    "f_min",
    "alpha",
    "phi",
    "bs_x",
    "bs_y",
    "ris_x",
    "ris_y",
    "ue_x",
    "ue_y",
    "ue_radius",
    "pathloss_ris",
    "pathloss_direct",
    "c0_db",
    "d0",
    "rician_eps_db",
    "d_over_lambda",
    "angle_mode",
    "gamma0",
    "gamma_factor",
    "gamma_max",
    "inner_tol",
    "inner_cap",
    "c4_tol",
    "ramp_stages",
    "ramp_inner_cap",
    "restoration_rounds",
    "sca_tol",
    "sca_cap",
    "qcqp_tol",
    "eh_aux",
];

/// Reads a configuration file. See [`parse_config`] for the format.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

/// Parses `key = value` lines. `#` starts a comment, blank lines are skipped.
/// Decibel keys (`*_db`, `*_dbm`) are converted to linear units here; all
/// other powers are in milliwatts and `phi` is in radians. Unknown and
/// repeated keys are rejected with their line number.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let err = |line: usize, message: String| Error::Config {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries: HashMap<String, (usize, String)> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(
                line_no,
                format!("expected `key = value`, found `{content}`"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
            return Err(err(line_no, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(err(line_no, format!("key `{key}` has no value")));
        }
        if let Some((first, _)) = entries.get(key) {
            return Err(err(
                line_no,
                format!("key `{key}` already set on line {first}"),
            ));
        }
        entries.insert(key.to_string(), (line_no, value.to_string()));
    }
    let missing: Vec<&str> = REQUIRED_KEYS
        .iter()
        .copied()
        .filter(|k| !entries.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        return Err(err(
            0,
            format!("missing required keys: {}", missing.join(", ")),
        ));
    }

    let number = |key: &str| -> Result<Option<f64>> {
        match entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| err(*line, format!("`{key}`: `{v}` is not a finite number"))),
        }
    };
    let count = |key: &str| -> Result<Option<usize>> {
        match entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<usize>().map(Some).map_err(|_| {
                err(
                    *line,
                    format!("`{key}`: `{v}` is not a nonnegative integer"),
                )
            }),
        }
    };
    let req = |v: Option<f64>| v.expect("required keys checked above");

    let mut cfg = RunConfig::reference();
    let sys = &mut cfg.system;
    sys.m = count("m")?.expect("required");
    sys.k = count("k")?.expect("required");
    sys.n = count("n")?.expect("required");
    sys.p_t = dbm_to_mw(req(number("p_t_dbm")?));
    sys.sigma2 = dbm_to_mw(req(number("sigma2_dbm")?));
    sys.delta2 = dbm_to_mw(req(number("delta2_dbm")?));
    sys.eta = req(number("eta")?);
    sys.xi = req(number("xi")?);
    sys.lambda_bar = req(number("lambda_bar")?);
    sys.gamma_min = db_to_linear(req(number("gamma_min_db")?));
    sys.p_min = req(number("p_min_mw")?);
    if let Some(v) = number("f_min")? {
        sys.reflection.f_min = v;
    }
    if let Some(v) = number("alpha")? {
        sys.reflection.alpha = v;
    }
    if let Some(v) = number("phi")? {
        sys.reflection.phi = v;
    }

    let geo = &mut cfg.geometry;
    let [bs_x, bs_y] = &mut geo.bs_pos;
    let [ris_x, ris_y] = &mut geo.ris_pos;
    let [ue_x, ue_y] = &mut geo.ue_center;
    for (key, slot) in [
        ("bs_x", bs_x),
        ("bs_y", bs_y),
        ("ris_x", ris_x),
        ("ris_y", ris_y),
        ("ue_x", ue_x),
        ("ue_y", ue_y),
        ("ue_radius", &mut geo.ue_radius),
        ("pathloss_ris", &mut geo.pathloss_ris),
        ("pathloss_direct", &mut geo.pathloss_direct),
        ("c0_db", &mut geo.c0_db),
        ("d0", &mut geo.d0),
        ("rician_eps_db", &mut geo.rician_eps_db),
        ("d_over_lambda", &mut geo.d_over_lambda),
    ] {
        if let Some(v) = number(key)? {
            *slot = v;
        }
    }
    if let Some((line, v)) = entries.get("angle_mode") {
        geo.angle_mode = match v.as_str() {
            "random" => AngleMode::Random,
            "geometric" => AngleMode::Geometric,
            other => {
                return Err(err(
                    *line,
                    format!("`angle_mode`: expected random or geometric, found `{other}`"),
                ))
            }
        };
    }

    let solve = &mut cfg.solve;
    for (key, slot) in [
        ("gamma0", &mut solve.gamma0),
        ("gamma_factor", &mut solve.gamma_factor),
        ("gamma_max", &mut solve.gamma_max),
        ("inner_tol", &mut solve.inner_tol),
        ("c4_tol", &mut solve.c4_tol),
    ] {
        if let Some(v) = number(key)? {
            *slot = v;
        }
    }
    for (key, slot) in [
        ("inner_cap", &mut solve.inner_cap),
        ("ramp_stages", &mut solve.ramp_stages),
        ("ramp_inner_cap", &mut solve.ramp_inner_cap),
        ("restoration_rounds", &mut solve.restoration_rounds),
    ] {
        if let Some(v) = count(key)? {
            *slot = v;
        }
    }
    if let Some(v) = number("sca_tol")? {
        solve.w_sca.tol = v;
        solve.v_sca.tol = v;
    }
    if let Some(v) = count("sca_cap")? {
        solve.w_sca.cap = v;
        solve.v_sca.cap = v;
    }
    if let Some(v) = number("qcqp_tol")? {
        solve.w_sca.barrier.tol = v;
        solve.v_sca.barrier.tol = v;
    }
    if let Some((line, v)) = entries.get("eh_aux") {
        solve.eh_aux = v.parse::<bool>().map_err(|_| {
            err(
                *line,
                format!("`eh_aux`: expected true or false, found `{v}`"),
            )
        })?;
    }

    cfg.validate().map_err(|e| {
        // point at the line of the offending key when one matches
        let line = match &e {
            Error::InvalidParameter { name, .. } => entries
                .iter()
                .filter(|(k, _)| k.starts_with(name.split('/').next().unwrap_or(name)))
                .map(|(_, (l, _))| *l)
                .min()
                .unwrap_or(0),
            _ => 0,
        };
        err(line, e.to_string())
    })?;
    Ok(cfg)
}

/// Which design a result row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    FullRis,
    NoRis,
    RandomPhase,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FullRis, Method::NoRis, Method::RandomPhase];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::FullRis => "full_ris",
            Method::NoRis => "no_ris",
            Method::RandomPhase => "random_phase",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_ris" => Ok(Method::FullRis),
            "no_ris" | "no-ris" => Ok(Method::NoRis),
            "random_phase" | "random-phase" => Ok(Method::RandomPhase),
            other => Err(Error::invalid(
                "method",
                format!("unknown method `{other}`"),
            )),
        }
    }
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NRis,
    LambdaBar,
    FMin,
    KUsers,
}

impl SweepParam {
    pub const ALL: [SweepParam; 4] = [
        SweepParam::NRis,
        SweepParam::LambdaBar,
        SweepParam::FMin,
        SweepParam::KUsers,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::NRis => "n_ris",
            SweepParam::LambdaBar => "lambda_bar",
            SweepParam::FMin => "f_min",
            SweepParam::KUsers => "k_users",
        }
    }

    /// Position in [`SweepParam::ALL`], mixed into the drop seeds.
    pub fn index(&self) -> u64 {
        SweepParam::ALL.iter().position(|p| p == self).unwrap_or(0) as u64
    }

    fn axis_label(&self) -> &'static str {
        match self {
            SweepParam::NRis => "Number of RIS elements N",
            SweepParam::LambdaBar => "Weight lambda_bar",
            SweepParam::FMin => "Minimum reflection amplitude f_min",
            SweepParam::KUsers => "Number of users K",
        }
    }

    /// Configuration with the swept parameter set to `value`.
    pub fn apply(&self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::invalid(
                    self.as_str(),
                    format!("{v} is not a nonnegative integer"),
                ))
            }
        };
        match self {
            SweepParam::NRis => cfg.system.n = as_count(value)?,
            SweepParam::LambdaBar => cfg.system.lambda_bar = value,
            SweepParam::FMin => cfg.system.reflection.f_min = value,
            SweepParam::KUsers => cfg.system.k = as_count(value)?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid("param", format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    /// Strictly increasing parameter values.
    pub values: Vec<f64>,
    pub drops: usize,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("values", "need at least one value"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "must be finite"));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("values", "must be strictly increasing"));
        }
        if self.drops == 0 {
            return Err(Error::invalid("drops", "need at least one drop"));
        }
        Ok(())
    }
}

/// Seed of one Monte-Carlo drop. It depends on the master seed, the swept
/// parameter and the drop index but not on the parameter value, so every
/// value of a sweep sees the same channel draws.
pub fn drop_seed(master_seed: u64, param: SweepParam, drop: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((param.index() << 32) | drop as u64);
    rng.next_u64()
}

/// Generator for the solver-side randomness of `method` at drop seed `seed`,
/// independent of the channel streams.
fn method_rng(seed: u64, method: Method) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + method as u64);
    rng
}

/// One line of the result CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub param: String,
    pub value: f64,
    pub drop: usize,
    pub seed: u64,
    pub method: String,
    pub sum_rate_bpshz: f64,
    pub rate_ph: f64,
    pub harvested_power_mw_total: f64,
    pub objective: f64,
    pub inner_iters: usize,
    pub outer_stages: usize,
    pub c4_violation: f64,
    pub max_residual: f64,
    pub wall_ms: f64,
    pub status: String,
}

/// Where a row sits in a batch.
#[derive(Debug, Clone)]
pub struct CellLabel {
    pub param: String,
    pub value: f64,
    pub drop: usize,
}

impl CellLabel {
    /// Label used for runs outside a sweep.
    pub fn single() -> Self {
        Self {
            param: "none".into(),
            value: 0.0,
            drop: 0,
        }
    }
}

fn report_row(
    label: &CellLabel,
    seed: u64,
    method: Method,
    report: &SolveReport,
    wall_ms: f64,
) -> ResultRow {
    let m = &report.metrics;
    ResultRow {
        param: label.param.clone(),
        value: label.value,
        drop: label.drop,
        seed,
        method: method.as_str().into(),
        sum_rate_bpshz: m.rate_id,
        rate_ph: m.rate_ph,
        harvested_power_mw_total: m.harvested_total(),
        objective: m.objective,
        inner_iters: report.trace.inner_iterations,
        outer_stages: report.trace.outer_stages,
        c4_violation: m.c4_violation,
        max_residual: report.residuals.max_inequality().max(0.0),
        wall_ms,
        status: report.status.as_str().into(),
    }
}

/// Row for a solve that returned an error: zero metrics, status infeasible.
fn failed_row(label: &CellLabel, seed: u64, method: Method, wall_ms: f64) -> ResultRow {
    ResultRow {
        param: label.param.clone(),
        value: label.value,
        drop: label.drop,
        seed,
        method: method.as_str().into(),
        sum_rate_bpshz: 0.0,
        rate_ph: 0.0,
        harvested_power_mw_total: 0.0,
        objective: 0.0,
        inner_iters: 0,
        outer_stages: 0,
        c4_violation: 0.0,
        max_residual: 0.0,
        wall_ms,
        status: SolveStatus::Infeasible.as_str().into(),
    }
}

/// Runs one design on given channels.
pub fn solve_method(
    cfg: &RunConfig,
    channels: &ChannelSet,
    seed: u64,
    method: Method,
) -> Result<SolveReport> {
    let mut rng = method_rng(seed, method);
    match method {
        Method::FullRis => penalty_solve(&cfg.system, channels, &cfg.solve, &mut rng),
        Method::NoRis => no_ris_baseline(&cfg.system, channels, &cfg.solve),
        Method::RandomPhase => random_phase_baseline(&cfg.system, channels, &cfg.solve, &mut rng),
    }
}

/// Samples channels from `seed` and runs every method in `methods` on them,
/// one row each. Solver errors become `infeasible` rows and are reported on
/// stderr; channel sampling errors abort.
pub fn run_methods(
    cfg: &RunConfig,
    seed: u64,
    methods: &[Method],
    label: &CellLabel,
    timing: bool,
) -> Result<Vec<ResultRow>> {
    let channels = sample_channels_from_seed(&cfg.system, &cfg.geometry, seed)?;
    Ok(methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = solve_method(cfg, &channels, seed, method);
            let wall_ms = if timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            match outcome {
                Ok(report) => report_row(label, seed, method, &report, wall_ms),
                Err(e) => {
                    eprintln!(
                        "{} {}={} drop {}: {}",
                        method.as_str(),
                        label.param,
                        label.value,
                        label.drop,
                        e
                    );
                    failed_row(label, seed, method, wall_ms)
                }
            }
        })
        .collect())
}

/// All three designs on the channel draw of `seed`, without timing.
pub fn run_single(cfg: &RunConfig, seed: u64) -> Result<Vec<ResultRow>> {
    run_methods(cfg, seed, &Method::ALL, &CellLabel::single(), false)
}

/// Per-value means of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub param: String,
    pub value: f64,
    pub method: String,
    /// Rows in the cell.
    pub rows: usize,
    /// Rows included in the means (status not `infeasible`).
    pub used: usize,
    pub converged: usize,
    pub mean_sum_rate_bpshz: f64,
    pub mean_rate_ph: f64,
    pub mean_harvested_power_mw_total: f64,
    pub mean_objective: f64,
    pub mean_inner_iters: f64,
    pub mean_c4_violation: f64,
    pub mean_max_residual: f64,
}

/// Groups rows by (value, method) in first-appearance order and averages the
/// rows that are not infeasible.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut order: Vec<(String, u64, String)> = Vec::new();
    let mut groups: HashMap<(String, u64, String), Vec<&ResultRow>> = HashMap::new();
    for r in rows {
        let key = (r.param.clone(), r.value.to_bits(), r.method.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let used: Vec<&&ResultRow> = members
                .iter()
                .filter(|r| r.status != SolveStatus::Infeasible.as_str())
                .collect();
            let mean = |f: &dyn Fn(&ResultRow) -> f64| -> f64 {
                if used.is_empty() {
                    f64::NAN
                } else {
                    used.iter().map(|r| f(r)).sum::<f64>() / used.len() as f64
                }
            };
            AggregateRow {
                param: key.0.clone(),
                value: f64::from_bits(key.1),
                method: key.2.clone(),
                rows: members.len(),
                used: used.len(),
                converged: members
                    .iter()
                    .filter(|r| r.status == SolveStatus::Converged.as_str())
                    .count(),
                mean_sum_rate_bpshz: mean(&|r| r.sum_rate_bpshz),
                mean_rate_ph: mean(&|r| r.rate_ph),
                mean_harvested_power_mw_total: mean(&|r| r.harvested_power_mw_total),
                mean_objective: mean(&|r| r.objective),
                mean_inner_iters: mean(&|r| r.inner_iters as f64),
                mean_c4_violation: mean(&|r| r.c4_violation),
                mean_max_residual: mean(&|r| r.max_residual),
            }
        })
        .collect()
}

/// Options of a sweep run that do not change which cells are computed.
#[derive(Debug, Clone)]
pub struct SweepRunOptions {
    pub methods: Vec<Method>,
    /// Fill `wall_ms`; the CSV then differs between runs.
    pub timing: bool,
}

impl Default for SweepRunOptions {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            timing: false,
        }
    }
}

/// Rows of a sweep and the files written for it.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
    pub rows_path: PathBuf,
    pub aggregate_path: PathBuf,
    pub plot_path: PathBuf,
}

impl SweepOutcome {
    /// Whether every row reports `converged`.
    pub fn all_converged(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.status == SolveStatus::Converged.as_str())
    }

    /// Aggregates of one method, in value order.
    pub fn method(&self, method: Method) -> Vec<&AggregateRow> {
        self.aggregates
            .iter()
            .filter(|a| a.method == method.as_str())
            .collect()
    }
}

/// Computes every (value, drop) cell in parallel without touching the disk.
/// Rows come back ordered by value, then drop, then method.
pub fn sweep_rows(
    cfg: &RunConfig,
    spec: &SweepSpec,
    opts: &SweepRunOptions,
) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let configs: Vec<RunConfig> = spec
        .values
        .iter()
        .map(|&v| spec.parameter.apply(cfg, v))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|vi| (0..spec.drops).map(move |d| (vi, d)))
        .collect();
    let per_cell: Vec<Vec<ResultRow>> = cells
        .par_iter()
        .map(|&(vi, d)| {
            let label = CellLabel {
                param: spec.parameter.as_str().into(),
                value: spec.values[vi],
                drop: d,
            };
            let seed = drop_seed(spec.master_seed, spec.parameter, d);
            run_methods(&configs[vi], seed, &opts.methods, &label, opts.timing)
        })
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

pub const ROWS_FILE: &str = "sweep.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const PLOT_FILE: &str = "plot.gp";

/// Runs a sweep and writes `sweep.csv`, `aggregate.csv` and `plot.gp` into
/// `out_dir`, creating it if needed.
pub fn run_sweep(
    cfg: &RunConfig,
    spec: &SweepSpec,
    out_dir: impl AsRef<Path>,
    opts: &SweepRunOptions,
) -> Result<SweepOutcome> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let rows = sweep_rows(cfg, spec, opts)?;
    let aggregates = aggregate(&rows);
    let rows_path = out_dir.join(ROWS_FILE);
    let aggregate_path = out_dir.join(AGGREGATE_FILE);
    let plot_path = out_dir.join(PLOT_FILE);
    write_csv(&rows_path, &rows)?;
    write_csv(&aggregate_path, &aggregates)?;
    write_text(&plot_path, &plot_script(spec.parameter, &opts.methods))?;
    Ok(SweepOutcome {
        rows,
        aggregates,
        rows_path,
        aggregate_path,
        plot_path,
    })
}

/// Writes serializable records as RFC-4180 CSV with a header line.
pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut writer = csv::Writer::from_writer(file);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Gnuplot script drawing mean sum-rate and mean harvested power against the
/// swept parameter, one curve per method, from `aggregate.csv`.
pub fn plot_script(param: SweepParam, methods: &[Method]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# generated by ris-swipt; run `gnuplot {PLOT_FILE}` next to {AGGREGATE_FILE}"
    );
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 1200,480");
    let _ = writeln!(s, "set output 'sweep_{}.png'", param.as_str());
    let _ = writeln!(s, "set multiplot layout 1,2");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set key bottom right");
    let _ = writeln!(s, "set xlabel '{}'", param.axis_label());
    // aggregate columns: 2 value, 3 method, 7 sum rate, 9 harvested power
    for (ylabel, col) in [("Sum rate (bps/Hz)", 7), ("Harvested power (mW)", 9)] {
        let _ = writeln!(s, "set ylabel '{ylabel}'");
        let curves: Vec<String> = methods
            .iter()
            .map(|m| {
                format!(
                    "'{AGGREGATE_FILE}' skip 1 using 2:(strcol(3) eq '{0}' ? ${col} : 1/0) with linespoints title '{0}'",
                    m.as_str()
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    }
    let _ = writeln!(s, "unset multiplot");
    s
}
