//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error or failed verification,
//! 2 some result uncertified, 3 some computation stopped by its budget.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    chebyshev_bound, curse_lower_bound, entropy_sum, jensen_lhs, jensen_lower_bound, ln_power_ratio, poltract2_bound,
    poly_tract_constant, poly_tract_ratio, pt_log_criterion, qpt_criterion, qpt_exponent_bound, qpt_sufficient,
    spt_exponent_bisect, weak_tract_theta, HorizonEvaluation, SPT_DEFAULT_K_MAX,
};
use crate::config::{BoundSpec, BuiltFamily, ConfigError, ExperimentConfig, Format, ProblemSpec};
use crate::error::{BudgetKind, Error};
use crate::format::{ext_f64, fmt_f64};
use crate::korobov::classify;
use crate::numerics::ln_plus;
use crate::tensor::{info_complexity, Budget, ProductProblem};
use crate::verify::{self, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

const SCHEMA_LINE: &str = "#schema=1\n";

#[derive(Debug, Parser)]
#[command(name = "tractlab", version, about = "Average-case information complexity and tractability of tensor-product problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: logical processors).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized verification batches.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// n^avg(eps, d) over the configured grid.
    Complexity,
    /// Named bounds over the grid and family criteria over the horizon.
    Bounds,
    /// Tractability report for a Korobov family.
    Classify,
    /// Complexity joined with the point bounds, one row per grid point.
    Sweep,
    /// Run the verification suite.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Uncertified,
    BudgetPops,
    BudgetMemory,
    BudgetThreshold,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Uncertified => "uncertified",
            Status::BudgetPops => "budget_pops",
            Status::BudgetMemory => "budget_memory",
            Status::BudgetThreshold => "budget_threshold",
        }
    }

    fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::Uncertified => EXIT_UNCERTIFIED,
            _ => EXIT_BUDGET,
        }
    }
}

/// One grid point of `complexity`. Budget stops report the proven lower
/// bound as both `n` and `n_low`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub epsilon: f64,
    pub d: usize,
    pub n: u64,
    pub certified: bool,
    pub status: Status,
    #[serde(serialize_with = "ext_f64")]
    pub partial_sum: f64,
    #[serde(serialize_with = "ext_f64")]
    pub trace: f64,
    pub pops: u64,
    pub n_low: u64,
    pub n_high: Option<u64>,
}

#[derive(Debug)]
enum Fatal {
    Config(ConfigError),
    Compute(String),
    Io(String),
}

impl std::fmt::Display for Fatal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fatal::Config(e) => write!(f, "{e}"),
            Fatal::Compute(e) => write!(f, "{e}"),
            Fatal::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for Fatal {
    fn from(e: ConfigError) -> Self {
        Fatal::Config(e)
    }
}

#[cfg(test)]
fn grid(cfg: &ExperimentConfig) -> Vec<(usize, f64)> {
    // d-major, eps-minor
    cfg.dims.iter().flat_map(|d| cfg.epsilons.iter().map(move |e| (*d, *e))).collect()
}

fn complexity_row(p: &ProductProblem, d: usize, epsilon: f64, budget: &Budget) -> Result<ComplexityRow, Fatal> {
    match info_complexity(p, epsilon, budget) {
        Ok(r) => Ok(ComplexityRow {
            epsilon,
            d,
            n: r.n,
            certified: r.certified,
            status: if r.certified { Status::Ok } else { Status::Uncertified },
            partial_sum: r.partial_sum,
            trace: r.trace_d,
            pops: r.enumerated,
            n_low: r.n_low,
            n_high: r.n_high,
        }),
        Err(Error::Budget { reason, pops, lower_bound }) => Ok(ComplexityRow {
            epsilon,
            d,
            n: lower_bound,
            certified: false,
            status: match reason {
                BudgetKind::Pops => Status::BudgetPops,
                BudgetKind::Memory => Status::BudgetMemory,
                BudgetKind::Threshold => Status::BudgetThreshold,
            },
            partial_sum: f64::NAN,
            trace: p.trace_d().to_f64(),
            pops,
            n_low: lower_bound,
            n_high: None,
        }),
        Err(e) => Err(Fatal::Compute(format!("d={d} eps={epsilon}: {e}"))),
    }
}

fn problems(family: &BuiltFamily, dims: &[usize]) -> Result<Vec<ProductProblem>, Fatal> {
    dims.iter()
        .map(|d| family.problem(*d).map_err(|e| Fatal::Config(ConfigError::Invalid { field: "dims".into(), message: format!("d={d}: {e}") })))
        .collect()
}

pub fn complexity_rows(cfg: &ExperimentConfig, budget: &Budget) -> Result<Vec<ComplexityRow>, String> {
    complexity_rows_inner(cfg, budget).map_err(|e| e.to_string())
}

fn complexity_rows_inner(cfg: &ExperimentConfig, budget: &Budget) -> Result<Vec<ComplexityRow>, Fatal> {
    cfg.validate_grid()?;
    let family = cfg.problem.build(cfg.horizon())?;
    let probs = problems(&family, &cfg.dims)?;
    let points: Vec<(usize, usize, f64)> = cfg
        .dims
        .iter()
        .enumerate()
        .flat_map(|(i, d)| cfg.epsilons.iter().map(move |e| (i, *d, *e)))
        .collect();
    points.par_iter().map(|&(i, d, e)| complexity_row(&probs[i], d, e, budget)).collect()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(SCHEMA_LINE.as_bytes());
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt_u64(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn json_lines<T: Serialize>(rows: &T) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("serializable rows");
    s.push('\n');
    s
}

pub fn render_complexity(rows: &[ComplexityRow], format: Format) -> String {
    match format {
        Format::Json => json_lines(&rows),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["d", "epsilon", "n", "certified", "status", "n_low", "n_high", "partial_sum", "trace", "pops"])
                .expect("in-memory");
            for r in rows {
                w.write_record([
                    r.d.to_string(),
                    fmt_f64(r.epsilon),
                    r.n.to_string(),
                    r.certified.to_string(),
                    r.status.as_str().into(),
                    r.n_low.to_string(),
                    opt_u64(r.n_high),
                    fmt_f64(r.partial_sum),
                    fmt_f64(r.trace),
                    r.pops.to_string(),
                ])
                .expect("in-memory");
            }
            finish_csv(w)
        }
    }
}

/// One evaluated bound. Family criteria carry no `epsilon` and report the
/// horizon as `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub d: usize,
    pub epsilon: Option<f64>,
    pub bound: String,
    #[serde(serialize_with = "ext_f64")]
    pub value: f64,
    pub ln_value: Option<f64>,
    pub exact: Option<bool>,
    pub stabilized: Option<bool>,
    pub argmax: Option<usize>,
    pub note: String,
}

impl BoundRow {
    fn point(d: usize, epsilon: f64, bound: String) -> Self {
        Self {
            d,
            epsilon: Some(epsilon),
            bound,
            value: f64::NAN,
            ln_value: None,
            exact: None,
            stabilized: None,
            argmax: None,
            note: String::new(),
        }
    }

    fn horizon(bound: String, h: &HorizonEvaluation) -> Self {
        Self {
            d: h.horizon,
            epsilon: None,
            bound,
            value: h.value,
            ln_value: None,
            exact: None,
            stabilized: Some(h.stabilized),
            argmax: Some(h.argmax),
            note: String::new(),
        }
    }

    fn failed_family(bound: String, horizon: usize, e: impl std::fmt::Display) -> Self {
        Self {
            d: horizon,
            epsilon: None,
            bound,
            value: f64::NAN,
            ln_value: None,
            exact: None,
            stabilized: None,
            argmax: None,
            note: e.to_string(),
        }
    }
}

/// Constants that point bounds need from the whole family.
struct FamilyConstants {
    /// `poly_tract_constant` per `Poltract2` spec, in spec order.
    poltract: Vec<Result<f64, String>>,
}

fn family_constants(family: &BuiltFamily, specs: &[BoundSpec], horizon: usize) -> FamilyConstants {
    let poltract = specs
        .iter()
        .filter_map(|s| match s {
            BoundSpec::Poltract2 { tau, q } => Some(
                poly_tract_constant(family.problems(), *q, *tau, horizon)
                    .map(|h| h.value)
                    .map_err(|e| e.to_string()),
            ),
            _ => None,
        })
        .collect();
    FamilyConstants { poltract }
}

fn eval_point(spec: &BoundSpec, p: &ProductProblem, eps: f64, consts: &FamilyConstants, poltract_idx: usize) -> BoundRow {
    let d = p.d();
    let mut row = BoundRow::point(d, eps, spec.label());
    let from_eval = |row: &mut BoundRow, r: crate::Result<crate::bounds::BoundEvaluation>| match r {
        Ok(b) => {
            row.value = b.value;
            row.ln_value = Some(b.ln_value);
            row.exact = Some(b.exact);
        }
        Err(e) => row.note = e.to_string(),
    };
    let from_ln = |row: &mut BoundRow, r: crate::Result<(f64, bool)>| match r {
        Ok((l, exact)) => {
            row.value = l.exp();
            row.ln_value = Some(l);
            row.exact = Some(exact);
        }
        Err(e) => row.note = e.to_string(),
    };
    match spec {
        BoundSpec::Chebyshev { tau, z } => from_eval(&mut row, chebyshev_bound(p, eps, *tau, *z)),
        BoundSpec::Poltract2 { tau, q } => match &consts.poltract[poltract_idx] {
            Ok(c) => from_eval(&mut row, poltract2_bound(*c, *q, *tau, d, eps)),
            Err(e) => row.note = e.clone(),
        },
        BoundSpec::Curse => from_eval(&mut row, curse_lower_bound(p, eps)),
        BoundSpec::Jensen { gamma } => from_eval(&mut row, jensen_lower_bound(p, *gamma)),
        BoundSpec::JensenLhs { gamma } => from_ln(&mut row, jensen_lhs(p, *gamma).map(|l| (l, true))),
        BoundSpec::Entropy => match entropy_sum(p) {
            Ok(h) => {
                row.value = h.total;
                row.exact = Some(h.exact);
            }
            Err(e) => row.note = e.to_string(),
        },
        BoundSpec::PolyTractRatio { tau, q } => from_eval(&mut row, poly_tract_ratio(p, *tau, *q)),
        BoundSpec::QptProduct { delta } => {
            if *delta > 0.0 && *delta < 1.0 {
                from_ln(&mut row, ln_power_ratio(p, 1.0 - delta / ln_plus(d as f64)))
            } else {
                row.note = format!("delta must lie in (0, 1), got {delta}");
            }
        }
        BoundSpec::WeakTheta { tau } => match weak_tract_theta(p, *tau, d) {
            Ok(t) => {
                row.value = t;
                row.exact = Some(true);
            }
            Err(e) => row.note = e.to_string(),
        },
        _ => unreachable!("family criteria are evaluated separately"),
    }
    row
}

fn eval_family(spec: &BoundSpec, family: &BuiltFamily, horizon: usize) -> Vec<BoundRow> {
    let label = spec.label();
    let need_tensor = || family.tensor().ok_or("criterion needs a coordinate-wise family");
    match spec {
        BoundSpec::PolyTractConstant { tau, q } => vec![match poly_tract_constant(family.problems(), *q, *tau, horizon) {
            Ok(h) => BoundRow::horizon(label, &h),
            Err(e) => BoundRow::failed_family(label, horizon, e),
        }],
        BoundSpec::QptCriterion { delta } => match qpt_criterion(family.problems(), *delta, horizon) {
            Ok(h) => {
                let mut rows = vec![BoundRow::horizon(label, &h)];
                let mut t = BoundRow::horizon(format!("qpt_exponent_bound(delta={})", fmt_f64(*delta)), &h);
                match qpt_exponent_bound(*delta, h.value) {
                    Ok(v) => t.value = v,
                    Err(e) => {
                        t.value = f64::NAN;
                        t.note = e.to_string();
                    }
                }
                rows.push(t);
                rows
            }
            Err(e) => vec![BoundRow::failed_family(label, horizon, e)],
        },
        BoundSpec::QptSufficient { delta } => {
            match need_tensor().map_err(|e| e.to_string()).and_then(|f| qpt_sufficient(f, *delta, horizon).map_err(|e| e.to_string())) {
                Ok(q) => vec![
                    BoundRow::horizon(format!("{label}.log_sum"), &q.log_sum),
                    BoundRow::horizon(format!("{label}.sum"), &q.sum),
                ],
                Err(e) => vec![BoundRow::failed_family(label, horizon, e)],
            }
        }
        BoundSpec::PtLog { tau } => {
            match need_tensor().map_err(|e| e.to_string()).and_then(|f| pt_log_criterion(f, *tau, horizon).map_err(|e| e.to_string())) {
                Ok(c) => vec![
                    BoundRow::horizon(format!("{label}.q_tau"), &c.q_tau),
                    BoundRow::horizon(format!("{label}.linear"), &c.linear),
                    BoundRow::horizon(format!("{label}.sup_gate"), &c.sup_gate),
                ],
                Err(e) => vec![BoundRow::failed_family(label, horizon, e)],
            }
        }
        BoundSpec::SptExponent { tau_grid, k_max } => {
            let k = k_max.unwrap_or(SPT_DEFAULT_K_MAX);
            match need_tensor()
                .map_err(|e| e.to_string())
                .and_then(|f| spt_exponent_bisect(f, k, tau_grid).map_err(|e| e.to_string()))
            {
                Ok(s) => vec![BoundRow {
                    d: k,
                    epsilon: None,
                    bound: label,
                    value: s.exponent,
                    ln_value: None,
                    exact: None,
                    stabilized: None,
                    argmax: None,
                    note: match (s.tau, s.grid_limited) {
                        (Some(t), true) => format!("tau={}; smallest grid point passed, exponent may be lower", fmt_f64(t)),
                        (Some(t), false) => format!("tau={}", fmt_f64(t)),
                        (None, _) => "no grid point passed".into(),
                    },
                }],
                Err(e) => vec![BoundRow::failed_family(label, k, e)],
            }
        }
        _ => unreachable!("point bounds are evaluated per grid point"),
    }
}

struct PointContext<'a> {
    specs: Vec<BoundSpec>,
    consts: FamilyConstants,
    probs: Vec<ProductProblem>,
    family: BuiltFamily,
    cfg: &'a ExperimentConfig,
}

fn point_context(cfg: &ExperimentConfig) -> Result<PointContext<'_>, Fatal> {
    cfg.validate_grid()?;
    let family = cfg.problem.build(cfg.horizon())?;
    let probs = problems(&family, &cfg.dims)?;
    let specs = cfg.bounds_or_default();
    let horizon = *cfg.dims.iter().max().expect("validated");
    let consts = family_constants(&family, &specs, horizon);
    Ok(PointContext { specs, consts, probs, family, cfg })
}

impl PointContext<'_> {
    fn point_rows(&self, i: usize, eps: f64) -> Vec<BoundRow> {
        let mut poltract_idx = 0;
        let mut rows = Vec::new();
        for s in self.specs.iter().filter(|s| !s.is_family_level()) {
            rows.push(eval_point(s, &self.probs[i], eps, &self.consts, poltract_idx));
            if matches!(s, BoundSpec::Poltract2 { .. }) {
                poltract_idx += 1;
            }
        }
        rows
    }

    fn indexed_grid(&self) -> Vec<(usize, f64)> {
        self.cfg
            .dims
            .iter()
            .enumerate()
            .flat_map(|(i, _)| self.cfg.epsilons.iter().map(move |e| (i, *e)))
            .collect()
    }
}

pub fn bound_rows(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>, String> {
    bound_rows_inner(cfg).map_err(|e| e.to_string())
}

fn bound_rows_inner(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>, Fatal> {
    let ctx = point_context(cfg)?;
    let mut rows: Vec<BoundRow> = ctx
        .indexed_grid()
        .par_iter()
        .map(|&(i, e)| ctx.point_rows(i, e))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let horizon = *cfg.dims.iter().max().expect("validated");
    let fam: Vec<Vec<BoundRow>> = ctx
        .specs
        .par_iter()
        .filter(|s| s.is_family_level())
        .map(|s| eval_family(s, &ctx.family, horizon))
        .collect();
    rows.extend(fam.into_iter().flatten());
    Ok(rows)
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

pub fn render_bounds(rows: &[BoundRow], format: Format) -> String {
    match format {
        Format::Json => json_lines(&rows),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["d", "epsilon", "bound", "value", "ln_value", "exact", "stabilized", "argmax", "note"])
                .expect("in-memory");
            for r in rows {
                w.write_record([
                    r.d.to_string(),
                    opt_f64(r.epsilon),
                    r.bound.clone(),
                    fmt_f64(r.value),
                    opt_f64(r.ln_value),
                    opt_bool(r.exact),
                    opt_bool(r.stabilized),
                    r.argmax.map(|a| a.to_string()).unwrap_or_default(),
                    r.note.clone(),
                ])
                .expect("in-memory");
            }
            finish_csv(w)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedValue {
    pub bound: String,
    #[serde(serialize_with = "ext_f64")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub complexity: ComplexityRow,
    pub bounds: Vec<NamedValue>,
}

pub fn sweep_rows(cfg: &ExperimentConfig, budget: &Budget) -> Result<Vec<SweepRow>, String> {
    sweep_rows_inner(cfg, budget).map_err(|e| e.to_string())
}

fn sweep_rows_inner(cfg: &ExperimentConfig, budget: &Budget) -> Result<Vec<SweepRow>, Fatal> {
    let ctx = point_context(cfg)?;
    ctx.indexed_grid()
        .par_iter()
        .map(|&(i, e)| {
            let complexity = complexity_row(&ctx.probs[i], cfg.dims[i], e, budget)?;
            let bounds = ctx
                .point_rows(i, e)
                .into_iter()
                .map(|r| NamedValue { bound: r.bound, value: r.value })
                .collect();
            Ok(SweepRow { complexity, bounds })
        })
        .collect()
}

pub fn render_sweep(rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Json => json_lines(&rows),
        Format::Csv => {
            let mut w = csv_writer();
            let mut header: Vec<String> = ["d", "epsilon", "n", "certified", "status"].iter().map(|s| s.to_string()).collect();
            if let Some(first) = rows.first() {
                header.extend(first.bounds.iter().map(|b| b.bound.clone()));
            }
            w.write_record(&header).expect("in-memory");
            for r in rows {
                let c = &r.complexity;
                let mut rec = vec![
                    c.d.to_string(),
                    fmt_f64(c.epsilon),
                    c.n.to_string(),
                    c.certified.to_string(),
                    c.status.as_str().into(),
                ];
                rec.extend(r.bounds.iter().map(|b| fmt_f64(b.value)));
                w.write_record(&rec).expect("in-memory");
            }
            finish_csv(w)
        }
    }
}

fn classify_output(cfg: &ExperimentConfig, format: Format) -> Result<(String, String), Fatal> {
    let ProblemSpec::KorobovFamily { weights, smoothness } = &cfg.problem else {
        return Err(Fatal::Config(ConfigError::Invalid {
            field: "problem.kind".into(),
            message: "classify needs a korobov_family problem".into(),
        }));
    };
    let rep = classify(weights, smoothness, cfg.horizon())
        .map_err(|e| Fatal::Config(ConfigError::Invalid { field: "problem".into(), message: e.to_string() }))?;
    let body = match format {
        Format::Json => json_lines(&rep),
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["property", "verdict", "mode", "exponent", "note"]).expect("in-memory");
            let s = serde_json::to_value(&rep).expect("serializable report");
            for name in ["spt", "pt", "qpt", "wt", "curse"] {
                let f = &s[name];
                let text = |v: &serde_json::Value| v.as_str().map(String::from).unwrap_or_default();
                let exponent = match name {
                    "spt" => rep.spt.exponent.map(fmt_f64).unwrap_or_default(),
                    _ => String::new(),
                };
                w.write_record([name.to_string(), text(&f["verdict"]), text(&f["mode"]), exponent, text(&f["note"])])
                    .expect("in-memory");
            }
            finish_csv(w)
        }
    };
    Ok((body, rep.table()))
}

fn verify_output(cfg: Option<&ExperimentConfig>, seed: Option<u64>, budget: Budget, format: Format) -> (String, bool) {
    let mut opts = VerifyOptions { budget, ..Default::default() };
    if let Some(s) = seed {
        opts.seed = s;
    }
    if let Some(b) = cfg.and_then(|c| c.verify.batch) {
        opts.batch = b;
    }
    let extra = cfg.map(|c| {
        let outcome = (|| -> Result<String, String> {
            let family = c.problem.build(c.horizon()).map_err(|e| e.to_string())?;
            let dims: Vec<usize> = if c.dims.is_empty() { vec![1] } else { c.dims.clone() };
            for d in &dims {
                family.problem(*d).map_err(|e| format!("d={d}: {e}"))?;
            }
            Ok(format!("builds at {} dimension(s)", dims.len()))
        })();
        ("configured problem is valid", outcome)
    });
    let report = verify::run(&opts, extra);
    let text = match format {
        Format::Json => json_lines(&report),
        Format::Csv => report.render(),
    };
    (text, report.passed())
}

fn worst_status<'a>(rows: impl Iterator<Item = &'a ComplexityRow>) -> i32 {
    rows.map(|r| r.status.exit_code()).max().unwrap_or(EXIT_OK)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I, env_n_max: Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            } else {
                let _ = write!(stderr, "{e}");
                EXIT_CONFIG
            };
        }
    };
    match execute(&cli, env_n_max.as_deref(), stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}

fn execute(cli: &Cli, env_n_max: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Fatal> {
    let cfg = match &cli.config {
        Some(path) => Some(ExperimentConfig::load(path)?),
        None => None,
    };
    let require = || {
        cfg.as_ref().ok_or_else(|| {
            Fatal::Config(ConfigError::Invalid { field: "--config".into(), message: "this command needs a configuration file".into() })
        })
    };
    let format = |default: Format| cli.format.or(cfg.as_ref().and_then(|c| c.output.format)).unwrap_or(default);
    let budget = match &cfg {
        Some(c) => c.budget(env_n_max)?,
        None => ExperimentConfig::from_json(r#"{"problem": {"kind": "strange_ordering"}}"#)
            .expect("literal config")
            .budget(env_n_max)?,
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Fatal::Config(ConfigError::Invalid { field: "--jobs".into(), message: "must be at least 1".into() }));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Fatal::Io(e.to_string()))?;

    let mut notice = String::new();
    let (body, code) = pool.install(|| -> Result<(String, i32), Fatal> {
        Ok(match cli.command {
            Command::Complexity => {
                let rows = complexity_rows_inner(require()?, &budget)?;
                (render_complexity(&rows, format(Format::Csv)), worst_status(rows.iter()))
            }
            Command::Bounds => {
                let rows = bound_rows_inner(require()?)?;
                (render_bounds(&rows, format(Format::Csv)), EXIT_OK)
            }
            Command::Sweep => {
                let rows = sweep_rows_inner(require()?, &budget)?;
                let code = worst_status(rows.iter().map(|r| &r.complexity));
                (render_sweep(&rows, format(Format::Csv)), code)
            }
            Command::Classify => {
                let (body, table) = classify_output(require()?, format(Format::Json))?;
                notice = table;
                (body, EXIT_OK)
            }
            Command::Verify => {
                let (text, passed) = verify_output(cfg.as_ref(), cli.seed, budget, format(Format::Csv));
                (text, if passed { EXIT_OK } else { EXIT_CONFIG })
            }
        })
    })?;
    let _ = stderr.write_all(notice.as_bytes());

    let out_path = cli.out.clone().or_else(|| cfg.as_ref().and_then(|c| c.output.path.clone()));
    match out_path {
        Some(p) => std::fs::write(&p, body).map_err(|e| Fatal::Io(format!("cannot write {}: {e}", p.display())))?,
        None => stdout.write_all(body.as_bytes()).map_err(|e| Fatal::Io(e.to_string()))?,
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn grid_order_is_d_major() {
        let c = cfg(r#"{"problem": {"kind": "strange_ordering"}, "epsilons": [0.5, 0.1], "dims": [3, 1]}"#);
        assert_eq!(grid(&c), vec![(3, 0.5), (3, 0.1), (1, 0.5), (1, 0.1)]);
        let rows = complexity_rows(&c, &Budget::default()).unwrap();
        let order: Vec<_> = rows.iter().map(|r| (r.d, r.epsilon)).collect();
        assert_eq!(order, grid(&c));
    }

    #[test]
    fn epsilon_one_gives_zero() {
        let c = cfg(r#"{"problem": {"kind": "homogeneous", "spectrum": {"kind": "korobov", "g": 1.0, "r": 1.0}},
                        "epsilons": [1.0], "dims": [1, 2, 3, 4, 5]}"#);
        let rows = complexity_rows(&c, &Budget::default()).unwrap();
        assert!(rows.iter().all(|r| r.n == 0 && r.certified));
        let csv = render_complexity(&rows, Format::Csv);
        assert!(csv.starts_with("#schema=1\nd,epsilon,n,certified,status,"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn budget_stop_reports_lower_bound() {
        let c = cfg(r#"{"problem": {"kind": "m_delta", "m": 2.0, "delta": 0.5}, "epsilons": [0.1], "dims": [100]}"#);
        let budget = Budget { n_max: 100, ..Budget::default() };
        let rows = complexity_rows(&c, &budget).unwrap();
        assert!(matches!(rows[0].status, Status::BudgetThreshold | Status::BudgetPops));
        assert!(!rows[0].certified);
        assert!(rows[0].n > 100);
        assert_eq!(worst_status(rows.iter()), EXIT_BUDGET);
    }

    #[test]
    fn bounds_include_family_rows() {
        let c = cfg(r#"{"problem": {"kind": "korobov_family", "weights": {"kind": "power", "rho": 3.0},
                                    "smoothness": {"kind": "constant", "r": 2.0}},
                        "epsilons": [0.5], "dims": [1, 2],
                        "bounds": [{"name": "chebyshev", "tau": 0.9, "z": 0.9}, {"name": "poltract2", "tau": 0.9},
                                   {"name": "pt_log", "tau": 0.9}, {"name": "qpt_criterion", "delta": 0.5}]}"#);
        let rows = bound_rows(&c).unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.bound.as_str()).collect();
        assert_eq!(
            labels,
            [
                "chebyshev(tau=0.9,z=0.9)",
                "poltract2(tau=0.9,q=0)",
                "chebyshev(tau=0.9,z=0.9)",
                "poltract2(tau=0.9,q=0)",
                "pt_log(tau=0.9).q_tau",
                "pt_log(tau=0.9).linear",
                "pt_log(tau=0.9).sup_gate",
                "qpt_criterion(delta=0.5)",
                "qpt_exponent_bound(delta=0.5)",
            ]
        );
        // chebyshev at z = tau uses C_d; poltract2 uses the larger max over the horizon
        assert!(rows[0].value <= rows[1].value * (1.0 + 1e-12));
        assert!(rows[2].value <= rows[3].value * (1.0 + 1e-12));
        assert!(rows[7].note.is_empty() && rows[8].value >= 4.0);
        let csv = render_bounds(&rows, Format::Csv);
        assert!(csv.lines().nth(1).unwrap().starts_with("d,epsilon,bound,value"));

        // r = 1 makes the first exponent 1 - delta = 1/2 divergent; the row says so
        let c = cfg(r#"{"problem": {"kind": "korobov_family", "weights": {"kind": "power", "rho": 3.0},
                                    "smoothness": {"kind": "constant", "r": 1.0}},
                        "epsilons": [0.5], "dims": [2], "bounds": [{"name": "qpt_criterion", "delta": 0.5}]}"#);
        let rows = bound_rows(&c).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].value.is_nan() && rows[0].note.contains("diverges"), "{:?}", rows[0]);
    }

    #[test]
    fn classify_requires_korobov() {
        let c = cfg(r#"{"problem": {"kind": "strange_ordering"}}"#);
        assert!(classify_output(&c, Format::Json).is_err());
        let c = cfg(r#"{"problem": {"kind": "korobov_family", "weights": {"kind": "constant", "g0": 0.5},
                                    "smoothness": {"kind": "constant", "r": 1.0}}}"#);
        let (body, table) = classify_output(&c, Format::Csv).unwrap();
        assert!(body.contains("curse,holds,symbolic"), "{body}");
        assert!(table.contains("curse"));
    }
}
