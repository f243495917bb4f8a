//! The `momentum-lab` command line.
//!
//! Exit codes: `0` every requested certificate passes, `1` a certificate (or
//! check) fails, `2` usage or configuration error. Diagnostics go to standard
//! error; machine-readable output goes to files or, with `--json -`, standard output.
//!
//! Precedence for every setting: command-line flag, then config file, then
//! default. `MOMENTUM_LAB_SEED` supplies `run.seed` when neither sets it.

use crate::certify::LyapunovKind;
use crate::dynamics::{
    continuous_lyapunov, simulate_first_el, simulate_prox_first, simulate_prox_second, simulate_second_el, ContinuousSchedule,
    DynamicsKind, IntegratorOpts,
};
use crate::harness::output::{certify_csv, continuous_csv};
use crate::harness::sweep::{sweep, Axis, SweepOptions};
use crate::harness::{config::parse_seed_list, selfcheck, ExperimentConfig, Ini};
use crate::methods::{default_geometry, default_x0, MethodId};
use crate::problems::{corpus, corpus_names, CorpusParams, Problem};
use crate::{LabError, Result};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SEED_ENV: &str = "MOMENTUM_LAB_SEED";

fn cli_err(msg: String) -> LabError {
    LabError::ConfigError(msg)
}

#[derive(Debug, Parser)]
#[command(name = "momentum-lab", version, about = "Momentum methods with per-iteration Lyapunov certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment, certify it and write its artifacts.
    Run(RunArgs),
    /// Run a parameter grid and/or seed list over a base config.
    Sweep(SweepArgs),
    /// Re-certify a persisted trace CSV.
    Certify(CertifyArgs),
    /// Simulate a continuous-time dynamics and check its Lyapunov function.
    Dynamics(DynamicsArgs),
    /// List methods, problems, schedules, Lyapunov kinds and error formulas.
    List,
    /// Run the geometry, oracle, reduction and negative-control checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config value, `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Seed for stochastic gradients (`run.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Certificate JSON path, `-` for standard output.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Gap plot SVG path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Grid `section.key=v1,v2,...`. Without it only the seed list is swept.
    #[arg(long)]
    pub axis: Option<String>,
    /// Seeds, `a..b` (inclusive) or `a,b,c`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory; one subdirectory per cell.
    #[arg(long)]
    pub out: PathBuf,
    /// Parallel cells; default all logical cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Trace CSV written by `run`.
    #[arg(long)]
    pub csv: PathBuf,
    /// Lyapunov kind the trace was certified with; recorded in the output.
    #[arg(long)]
    pub kind: Option<String>,
    /// Result JSON path, `-` for standard output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// first_el, second_el, prox_first or prox_second.
    #[arg(long, default_value = "first_el")]
    pub kind: String,
    #[arg(long, default_value = "quadratic_illcond")]
    pub problem: String,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    /// Problem seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus parameter `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Weak dynamics: `e^β = t^p`.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Strong dynamics: `β = γt`; default `√μ`.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Strong convexity override.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Start time; default 1 for weak, 0 for strong dynamics.
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub t1: f64,
    /// Relative integrator tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Samples CSV (`t, f, E_t, step_size`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Lyapunov report JSON, `-` for standard output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Results JSON, `-` for standard output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Exit {
    pub code: i32,
    pub message: String,
}

impl From<LabError> for Exit {
    fn from(e: LabError) -> Self {
        Exit { code: 2, message: e.to_string() }
    }
}

fn emit_json(path: &Option<PathBuf>, text: &str) -> std::result::Result<(), Exit> {
    match path {
        Some(p) if p.as_os_str() == "-" => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Exit { code: 2, message: e.to_string() })
        }
        Some(p) => write_file(p, text.as_bytes()),
        None => Ok(()),
    }
}

fn write_file(p: &Path, bytes: &[u8]) -> std::result::Result<(), Exit> {
    std::fs::write(p, bytes).map_err(|e| Exit { code: 2, message: format!("cannot write {}: {e}", p.display()) })
}

/// Check an output path before any compute.
fn writable(p: &Option<PathBuf>) -> Result<()> {
    match p {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map(|_| ())
                .map_err(|e| cli_err(format!("output {} is not writable: {e}", p.display())))
        }
        _ => Ok(()),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse::<u64>().map(Some).map_err(|_| cli_err(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Load `path`, apply `--set` overrides and the seed fallback.
pub fn load_ini(path: &Path, sets: &[String], seed_flag: Option<u64>) -> Result<Ini> {
    let text = std::fs::read_to_string(path).map_err(|e| cli_err(format!("cannot read config {}: {e}", path.display())))?;
    let mut ini = Ini::parse(&text).map_err(|e| cli_err(format!("{}: {e}", path.display())))?;
    for s in sets {
        ini.apply_override(s)?;
    }
    match seed_flag {
        Some(s) => ini.set("run", "seed", &s.to_string()),
        None if ini.get("run", "seed").is_none() => {
            if let Some(s) = env_seed()? {
                ini.set("run", "seed", &s.to_string());
            }
        }
        None => {}
    }
    Ok(ini)
}

fn cmd_run(a: RunArgs) -> std::result::Result<i32, Exit> {
    let ini = load_ini(&a.config, &a.set, a.seed)?;
    let mut cfg = ExperimentConfig::from_ini(&ini)?;
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if a.csv.is_some() {
        cfg.outputs.csv = a.csv;
    }
    if a.json.is_some() {
        cfg.outputs.json = a.json;
    }
    if a.svg.is_some() {
        cfg.outputs.svg = a.svg;
    }
    let arts = crate::harness::run_experiment(&cfg)?;
    if cfg.outputs.json_stdout() {
        emit_json(&cfg.outputs.json, &arts.json_text)?;
    }
    let s = &arts.summary;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "n/a".into());
    match &s.error {
        Some(e) => eprintln!("FAIL: run failed: {e}"),
        None => eprintln!(
            "{}: final gap {}, rate exponent {}",
            if s.verdict { "PASS" } else { "FAIL" },
            fmt(s.final_gap),
            fmt(s.rate_exponent)
        ),
    }
    Ok(if s.verdict { 0 } else { 1 })
}

fn cmd_sweep(a: SweepArgs) -> std::result::Result<i32, Exit> {
    let ini = load_ini(&a.config, &a.set, None)?;
    let axis = a.axis.as_deref().map(Axis::parse).transpose()?;
    let seeds = a.seeds.as_deref().map(parse_seed_list).transpose()?;
    let rep = sweep(&ini, axis.as_ref(), &SweepOptions { out_dir: a.out, jobs: a.jobs, seeds })?;
    let failed = rep.cells.iter().filter(|c| !c.summary.verdict).count();
    for c in rep.cells.iter().filter(|c| c.summary.error.is_some()) {
        eprintln!("cell {} ({}={}): {}", c.index, rep.parameter, c.value, c.summary.error.as_deref().unwrap_or(""));
    }
    eprintln!(
        "{}: {} of {} cells certified; summary in {}",
        if failed == 0 { "PASS" } else { "FAIL" },
        rep.cells.len() - failed,
        rep.cells.len(),
        rep.aggregate_csv.display()
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_certify(a: CertifyArgs) -> std::result::Result<i32, Exit> {
    let kind = a.kind.as_deref().map(LyapunovKind::parse).transpose()?;
    writable(&a.json)?;
    let c = certify_csv(&a.csv)?;
    let mut doc = serde_json::to_value(&c).expect("certificate serializes");
    doc["kind"] = serde_json::json!(kind.map(|k| k.name()));
    doc["csv"] = serde_json::json!(a.csv.display().to_string());
    emit_json(&a.json, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
    if !c.stored_mismatches.is_empty() {
        eprintln!("warning: recomputed verdict differs from the stored pass column at steps {:?}", c.stored_mismatches);
    }
    eprintln!(
        "{}: {} checks{}",
        if c.overall { "PASS" } else { "FAIL" },
        c.checks,
        c.first_failure.map(|k| format!(", first failure at step {k}")).unwrap_or_default()
    );
    Ok(if c.overall { 0 } else { 1 })
}

fn parse_params(list: &[String]) -> Result<CorpusParams> {
    let mut p = CorpusParams::new();
    for s in list {
        let (k, v) = s.split_once('=').ok_or_else(|| cli_err(format!("--param '{s}' is not key=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| cli_err(format!("--param {k}: '{v}' is not a number")))?;
        p.insert(k.trim().to_string(), v);
    }
    Ok(p)
}

fn cmd_dynamics(a: DynamicsArgs) -> std::result::Result<i32, Exit> {
    let kind = DynamicsKind::parse(&a.kind)?;
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    writable(&a.csv)?;
    writable(&a.json)?;
    let inst = corpus(&a.problem, a.dim, seed, &parse_params(&a.params)?)?;
    let h = default_geometry(&inst)?;
    let x0 = default_x0(&inst, &h);
    let opts = IntegratorOpts::default().with_tol(a.tol).with_samples(a.samples);
    opts.validate()?;
    let strong = matches!(kind, DynamicsKind::SecondEl | DynamicsKind::ProxSecond);
    let mu = a.mu.or(inst.meta().strong_convexity_mu);
    let mu_req = || mu.ok_or_else(|| cli_err(format!("{} needs mu; {} declares none", kind.name(), inst.id())));
    let t0 = a.t0.unwrap_or(if strong { 0.0 } else { 1.0 });
    let sched = if strong { ContinuousSchedule::linear(a.gamma.map_or_else(|| mu_req().map(f64::sqrt), Ok)?) } else { ContinuousSchedule::polynomial(a.p) };
    let trace = match (kind, &inst.problem) {
        (DynamicsKind::FirstEl, Problem::Plain(f)) => simulate_first_el(f, &h, &sched, &x0, None, t0, a.t1, &opts)?,
        (DynamicsKind::SecondEl, Problem::Plain(f)) => simulate_second_el(f, &h, mu_req()?, &sched, &x0, None, t0, a.t1, &opts)?,
        (DynamicsKind::ProxFirst, _) => simulate_prox_first(&inst.as_composite(), &h, &sched, &x0, None, t0, a.t1, &opts)?,
        (DynamicsKind::ProxSecond, _) => simulate_prox_second(&inst.as_composite(), &h, mu_req()?, &sched, &x0, None, t0, a.t1, &opts)?,
        (_, Problem::Composite(_)) => return Err(cli_err(format!("{} is composite; use prox_first or prox_second", inst.id())).into()),
    };
    let r = inst.reference()?;
    let rep = continuous_lyapunov(&trace, trace.lyapunov_kind(), &r.x_star, r.f_star, mu)?;
    if let Some(p) = &a.csv {
        write_file(p, continuous_csv(&trace)?.as_bytes())?;
    }
    let doc = serde_json::json!({
        "kind": kind.name(),
        "problem_id": trace.problem_id,
        "schedule": trace.schedule.name(),
        "t0": t0,
        "t1": a.t1,
        "tol": a.tol,
        "nonincreasing": rep.nonincreasing,
        "rate_bound_holds": rep.rate_bound_holds,
        "max_increase": rep.max_increase,
        "slack": rep.slack,
        "first_violation": rep.first_violation,
        "final_gap": trace.gaps().last(),
        "stats": trace.stats,
    });
    emit_json(&a.json, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
    let ok = rep.nonincreasing && rep.rate_bound_holds;
    eprintln!(
        "{}: {} samples, max Lyapunov increase {:.3e} (slack {:.3e}), rate bound {}",
        if ok { "PASS" } else { "FAIL" },
        trace.samples.len(),
        rep.max_increase,
        rep.slack,
        if rep.rate_bound_holds { "holds" } else { "violated" }
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_list() -> std::result::Result<i32, Exit> {
    let mut out = String::new();
    out.push_str("methods:\n");
    for m in MethodId::ALL {
        out.push_str(&format!("  {}\n", m.name()));
    }
    out.push_str("problems:\n");
    for p in corpus_names() {
        out.push_str(&format!("  {p}\n"));
    }
    out.push_str("schedules:\n");
    for s in ["quadratic", "polynomial", "universal", "geometric", "two_over_k_plus_2", "sqrt", "sqrt_optimized", "exponential"] {
        out.push_str(&format!("  {s}\n"));
    }
    out.push_str("gradient maps:\n");
    for g in ["nesterov", "identity_xk1", "tseng_coupled", "universal_higher", "universal_nu"] {
        out.push_str(&format!("  {g}\n"));
    }
    out.push_str("lyapunov kinds:\n");
    for k in [LyapunovKind::WeakX, LyapunovKind::WeakY, LyapunovKind::StrongX, LyapunovKind::StrongY, LyapunovKind::ValueOnly] {
        out.push_str(&format!("  {}\n", k.name()));
    }
    out.push_str("dynamics:\n");
    for d in [DynamicsKind::FirstEl, DynamicsKind::SecondEl, DynamicsKind::ProxFirst, DynamicsKind::ProxSecond] {
        out.push_str(&format!("  {}\n", d.name()));
    }
    print!("{out}");
    Ok(0)
}

fn cmd_selfcheck(a: SelfcheckArgs) -> std::result::Result<i32, Exit> {
    writable(&a.json)?;
    let checks = selfcheck();
    for c in &checks {
        eprintln!("{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    emit_json(&a.json, &(serde_json::to_string_pretty(&checks).expect("json") + "\n"))?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    eprintln!("{}: {} of {} checks pass", if failed == 0 { "PASS" } else { "FAIL" }, checks.len() - failed, checks.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Dynamics(a) => cmd_dynamics(a),
        Command::List => cmd_list(),
        Command::Selfcheck(a) => cmd_selfcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    main_with(std::env::args_os())
}
