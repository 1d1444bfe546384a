//! Argument definitions and the four commands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ressize_core::dispatch::{
    ledger_csv_row, simulate_horizon, simulate_horizon_with, DispatchError, HourRecord, StorageSizing,
    StrategyConfig, SystemSizing, LEDGER_CSV_HEADER,
};
use ressize_core::economics::{summarize, CostScenario, EconomicSummary};
use ressize_core::exec::Execution;
use ressize_core::optimizer::{
    hypervolume_clipped, momfa_run, nsga2_run, OptimizerError, Problem, RunOptions, RunOutcome, Solution,
};
use ressize_core::problem::SizingProblem;
use ressize_core::profiles::{
    synth_load_profile, synth_pv_profile, write_hourly_csv, LoadSynthParams, PvSynthParams,
};

use crate::config::{load_scenario, parse_sizing_arg, Algorithm, Resolved, SizingSpec, StrategyMode};
use crate::report::{ArchiveRef, LedgerAudit, RunReport, SimulationBrief};
use crate::{with_threads, CliError};

#[derive(Debug, Parser)]
#[command(name = "ressize", version, about = "PV + storage sizing and dispatch simulator")]
pub struct Cli {
    /// Base directory for relative output paths.
    #[arg(long, global = true, env = "RESSIZE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for candidate evaluation (default: all cores).
    #[arg(long, global = true, env = "RESSIZE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic pv.csv (per kWp) and load.csv profiles.
    Synth(SynthArgs),
    /// Simulate one fixed system over the horizon.
    Simulate(SimulateArgs),
    /// Search the sizing space for the NPV/SSR Pareto front.
    Optimize(OptimizeArgs),
    /// Run both algorithms repeatedly on equal budgets.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostArg {
    Current,
    Ultimate,
}

impl From<CostArg> for CostScenario {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::Current => CostScenario::Current,
            CostArg::Ultimate => CostScenario::Ultimate,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `tropical` or `subtropical`, optionally followed by
    /// `,key=value` overrides of annual_kwh_per_kwp, seasonal_amplitude,
    /// noise_level.
    #[arg(long, default_value = "tropical")]
    pub pv_profile: String,
    /// `warehouse`, optionally followed by `,key=value` overrides of
    /// annual_kwh, day_night_ratio, weekend_factor, noise_level.
    #[arg(long, default_value = "warehouse")]
    pub load_profile: String,
    /// PV noise seed; the load uses `seed + 1`.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `strategy.mode`.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyMode>,
    /// Sizing file (TOML) or inline `kind=...,key=value` pairs; overrides
    /// the `[sizing]` section.
    #[arg(long)]
    pub sizing: Option<String>,
    #[arg(long, value_enum)]
    pub cost: Option<CostArg>,
    /// Hourly ledger CSV.
    #[arg(long)]
    pub ledger_out: Option<PathBuf>,
    /// Run report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub case: Option<u8>,
    #[arg(long, value_enum)]
    pub cost: Option<CostArg>,
    #[arg(long, value_enum)]
    pub algo: Option<Algorithm>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Minimum SSR as a fraction; solutions below it are infeasible.
    #[arg(long)]
    pub min_ssr: Option<f64>,
    /// Archive CSV; telemetry and report are written next to it.
    #[arg(long, default_value = "archive.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub case: Option<u8>,
    #[arg(long, value_enum)]
    pub cost: Option<CostArg>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Runs per algorithm.
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// Run `r` (0-based) uses seed `seed + r`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_ssr: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "compare")]
    pub out: PathBuf,
}

/// What a command produced, for callers that inspect results.
#[derive(Debug)]
pub enum Outcome {
    Synth {
        pv_monthly: [f64; 12],
        load_monthly: [f64; 12],
    },
    Simulate(Box<RunReport>),
    Optimize(Box<RunReport>),
    Compare(Box<RunReport>),
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let Cli {
        out_dir,
        threads,
        command,
    } = cli;
    let io = |e: std::io::Error| CliError::Runtime(e.into());
    match command {
        Command::Synth(a) => synth(&a, &out_dir, out),
        Command::Simulate(a) => simulate(&a, &out_dir, out),
        Command::Optimize(a) => {
            // Output may be produced on a worker; collect it and copy.
            let mut buf = Vec::new();
            let r = with_threads(threads, || optimize(&a, &out_dir, &mut buf))?;
            out.write_all(&buf).map_err(io)?;
            r
        }
        Command::Compare(a) => {
            let mut buf = Vec::new();
            let r = with_threads(threads, || compare(&a, &out_dir, &mut buf))?;
            out.write_all(&buf).map_err(io)?;
            r
        }
    }
}

fn resolve_out(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        out_dir.join(p)
    } else {
        p.to_path_buf()
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn rt(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

fn parse_overrides<'a>(spec: &'a str, presets: &[&str]) -> Result<(&'a str, Vec<(&'a str, f64)>), CliError> {
    let mut parts = spec.split(',').map(str::trim);
    let preset = parts.next().unwrap_or_default();
    if !presets.contains(&preset) {
        return Err(CliError::Config(format!(
            "unknown profile preset `{preset}` (expected one of {})",
            presets.join(", ")
        )));
    }
    let mut kv = Vec::new();
    for p in parts.filter(|p| !p.is_empty()) {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("profile override `{p}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("profile override `{p}`: not a number")))?;
        kv.push((k.trim(), v));
    }
    Ok((preset, kv))
}

pub fn pv_params_from_arg(spec: &str, seed: u64) -> Result<PvSynthParams, CliError> {
    let (preset, kv) = parse_overrides(spec, &["tropical", "subtropical"])?;
    let mut p = if preset == "tropical" {
        PvSynthParams::tropical(seed)
    } else {
        PvSynthParams::subtropical(seed)
    };
    for (k, v) in kv {
        match k {
            "annual_kwh_per_kwp" => p.annual_kwh_per_kwp = v,
            "seasonal_amplitude" => p.seasonal_amplitude = v,
            "noise_level" => p.noise_level = v,
            other => return Err(CliError::Config(format!("pv-profile: unknown key `{other}`"))),
        }
    }
    Ok(p)
}

pub fn load_params_from_arg(spec: &str, seed: u64) -> Result<LoadSynthParams, CliError> {
    let (_, kv) = parse_overrides(spec, &["warehouse"])?;
    let mut p = LoadSynthParams::warehouse(ressize_core::site::DEFAULT_ANNUAL_LOAD_KWH, seed);
    for (k, v) in kv {
        match k {
            "annual_kwh" => p.annual_kwh = v,
            "day_night_ratio" => p.day_night_ratio = v,
            "weekend_factor" => p.weekend_factor = v,
            "noise_level" => p.noise_level = v,
            other => return Err(CliError::Config(format!("load-profile: unknown key `{other}`"))),
        }
    }
    Ok(p)
}

fn synth(a: &SynthArgs, out_dir: &Path, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let pv_params = pv_params_from_arg(&a.pv_profile, a.seed)?;
    let load_params = load_params_from_arg(&a.load_profile, a.seed.wrapping_add(1))?;
    let pv = synth_pv_profile(&pv_params).map_err(|e| CliError::Config(format!("pv-profile: {e}")))?;
    let load = synth_load_profile(&load_params).map_err(|e| CliError::Config(format!("load-profile: {e}")))?;

    let dir = resolve_out(out_dir, &a.out);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(rt)?;
    // 2018-01-01 is a Monday, matching the generated series.
    let start = NaiveDate::from_ymd_opt(2018, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    for (name, series) in [("pv.csv", &pv), ("load.csv", &load)] {
        let path = dir.join(name);
        let w = create(&path).map_err(rt)?;
        write_hourly_csv(series, start, w)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(rt)?;
    }

    let (pv_m, load_m) = (pv.monthly_totals(), load.monthly_totals());
    print_monthly(out, &pv_m, &load_m).map_err(rt)?;
    Ok(Outcome::Synth {
        pv_monthly: pv_m,
        load_monthly: load_m,
    })
}

fn print_monthly(out: &mut dyn Write, pv: &[f64; 12], load: &[f64; 12]) -> std::io::Result<()> {
    const MONTHS: [&str; 12] = [
        "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
    ];
    writeln!(out, "{:<5} {:>14} {:>14}", "month", "pv_kwh_per_kwp", "load_kwh")?;
    for m in 0..12 {
        writeln!(out, "{:<5} {:>14.1} {:>14.0}", MONTHS[m], pv[m], load[m])?;
    }
    let (max, min) = (pv.iter().cloned().fold(f64::MIN, f64::max), pv.iter().cloned().fold(f64::MAX, f64::min));
    writeln!(out, "{:<5} {:>14.1} {:>14.0}", "total", pv.iter().sum::<f64>(), load.iter().sum::<f64>())?;
    writeln!(out, "pv max/min monthly ratio: {:.3}", max / min)
}

fn overrides_common(
    config: &Path,
    cost: Option<CostArg>,
    tweak: impl FnOnce(&mut crate::config::ScenarioFile),
) -> Result<Resolved, CliError> {
    let mut file = load_scenario(config)?;
    if let Some(c) = cost {
        file.economics.cost = c.into();
    }
    tweak(&mut file);
    file.resolve()
}

fn simulate(a: &SimulateArgs, out_dir: &Path, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let sizing_override = a.sizing.as_deref().map(parse_sizing_arg).transpose()?;
    let res = overrides_common(&a.config, a.cost, |f| {
        if let Some(m) = a.strategy {
            f.strategy.mode = m;
        }
        if let Some(s) = sizing_override {
            f.sizing = Some(s);
        }
    })?;
    let spec: SizingSpec = res
        .file
        .sizing
        .ok_or_else(|| CliError::Config("sizing: pass --sizing or add a [sizing] section".into()))?;
    let sizing = spec.to_sizing(res.file.inverter_efficiency);
    let strategy = res.file.strategy.to_strategy();
    strategy
        .validate(&sizing)
        .map_err(|e| CliError::Config(format!("strategy: {e}")))?;

    let mut ledger = match &a.ledger_out {
        Some(p) => {
            let path = resolve_out(out_dir, p);
            let mut w = csv::Writer::from_writer(create(&path).map_err(rt)?);
            w.write_record(LEDGER_CSV_HEADER).map_err(rt)?;
            Some(w)
        }
        None => None,
    };
    let mut write_error: Option<csv::Error> = None;
    let mut audit = Auditor::new(&sizing);
    let result = simulate_horizon_with(&res.scenario, &sizing, &strategy, |rec| {
        audit.check(rec);
        if let Some(w) = ledger.as_mut() {
            if write_error.is_none() {
                if let Err(e) = w.write_record(ledger_csv_row(rec)) {
                    write_error = Some(e);
                }
            }
        }
    })
    .map_err(dispatch_error)?;
    if let Some(e) = write_error {
        return Err(rt(e));
    }
    if let Some(mut w) = ledger {
        w.flush().map_err(rt)?;
    }
    let baseline = simulate_horizon(&res.scenario, &SystemSizing::baseline(), &StrategyConfig::Conventional).map_err(dispatch_error)?;
    let econ = summarize(&res.book, &sizing, &res.scenario.tariff, &baseline, &result).map_err(rt)?;

    print_simulation(out, &econ, &audit.audit).map_err(rt)?;

    let mut report = RunReport::new("simulate", &res.digest);
    report.sizing = Some(sizing);
    report.strategy = Some(strategy);
    report.simulation = Some(SimulationBrief::from(&result));
    report.economics = Some(econ);
    report.audit = Some(audit.audit);
    report.timings.total_seconds = started.elapsed().as_secs_f64();
    if let Some(p) = &a.report {
        report.write(&resolve_out(out_dir, p)).map_err(rt)?;
    }
    Ok(Outcome::Simulate(Box::new(report)))
}

fn dispatch_error(e: DispatchError) -> CliError {
    match e {
        DispatchError::OldsRequiresHydrogen | DispatchError::InvalidSizing(_) | DispatchError::InvalidStrategy(_) => {
            CliError::Config(e.to_string())
        }
        other => rt(other),
    }
}

fn print_simulation(out: &mut dyn Write, e: &EconomicSummary, audit: &LedgerAudit) -> std::io::Result<()> {
    writeln!(out, "NPV: {:.2}", e.npv)?;
    writeln!(out, "NPC: {:.2}", e.npc)?;
    writeln!(out, "SSR: {:.6}", e.ssr)?;
    writeln!(
        out,
        "ledger audit: {} ({} hours, balance residual {:.3e}, storage residual {:.3e})",
        if audit.passed { "pass" } else { "FAIL" },
        audit.hours,
        audit.max_balance_residual,
        audit.max_storage_residual
    )?;
    writeln!(out, "{:>4} {:>14} {:>14} {:>14}", "year", "baseline_bill", "system_bill", "savings")?;
    for (y, (b, s)) in e.baseline_bills.iter().zip(&e.system_bills).enumerate() {
        writeln!(out, "{:>4} {:>14.2} {:>14.2} {:>14.2}", y + 1, b, s, b - s)?;
    }
    Ok(())
}

/// Re-derives each hour's balance from the ledger as the run proceeds.
struct Auditor {
    eta: f64,
    hydrogen: bool,
    audit: LedgerAudit,
}

const AUDIT_TOLERANCE: f64 = 1e-9;

impl Auditor {
    fn new(sizing: &SystemSizing) -> Self {
        Self {
            eta: sizing.inverter_efficiency,
            hydrogen: matches!(sizing.storage, StorageSizing::Hydrogen { .. }),
            audit: LedgerAudit {
                passed: true,
                ..LedgerAudit::default()
            },
        }
    }

    fn check(&mut self, rec: &HourRecord<'_>) {
        let l = rec.ledger;
        let balance = (l.load - (self.eta * (l.pv_to_load + l.delivered_dc) + l.grid_import)).abs() / l.load.max(1e-12);
        let flow = if self.hydrogen {
            l.h2_produced - l.h2_consumed
        } else {
            l.charge_power - l.discharge_removal
        };
        let storage = (rec.level_before + flow - l.storage_level).abs() / l.storage_level.max(1.0);
        let a = &mut self.audit;
        a.hours += 1;
        a.max_balance_residual = a.max_balance_residual.max(balance);
        a.max_storage_residual = a.max_storage_residual.max(storage);
        a.passed &= balance <= AUDIT_TOLERANCE && storage <= AUDIT_TOLERANCE;
    }
}

fn optimize_problem(res: &Resolved) -> Result<SizingProblem, CliError> {
    let o = &res.file.optimizer;
    let case = res.file.case()?;
    SizingProblem::new(res.scenario.clone(), res.book.clone(), case, &res.file.bounds)
        .and_then(|p| p.with_min_ssr(o.min_ssr))
        .map(|p| p.with_inverter_efficiency(res.file.inverter_efficiency))
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run_algorithm(
    problem: &SizingProblem,
    res: &Resolved,
    algo: Algorithm,
    seed: u64,
) -> Result<RunOutcome, CliError> {
    let f = &res.file;
    let opts = RunOptions {
        budget: f.optimizer.budget,
        archive_capacity: f.optimizer.archive_capacity,
        execution: Execution::Parallel,
        injected: Vec::new(),
    };
    let outcome = match algo {
        Algorithm::Momfa => {
            let mut p = f.momfa;
            p.seed = seed;
            momfa_run(problem, &p, &opts)
        }
        Algorithm::Nsga2 => {
            let mut p = f.nsga2;
            p.seed = seed;
            nsga2_run(problem, &p, &opts)
        }
    };
    outcome.map_err(|e| match e {
        OptimizerError::BudgetTooSmall { .. } | OptimizerError::InvalidParameter { .. } => {
            CliError::Config(e.to_string())
        }
        other => rt(anyhow!(other)),
    })
}

const OBJECTIVE_NAMES: [&str; 2] = ["npv", "ssr"];
const SSR: usize = 1;

fn feasible_hypervolume(outcome: &RunOutcome) -> f64 {
    let pts: Vec<[f64; 2]> = outcome.archive.sorted_by(SSR).iter().map(|s| s.objectives.values).collect();
    hypervolume_clipped(&pts, outcome.reference)
}

fn write_archive(problem: &SizingProblem, outcome: &RunOutcome, path: &Path) -> Result<(), CliError> {
    let w = create(path).map_err(rt)?;
    outcome
        .archive
        .write_csv(problem.space(), OBJECTIVE_NAMES, SSR, w)
        .map_err(rt)
}

fn describe(problem: &SizingProblem, s: &Solution) -> String {
    let vars: Vec<String> = problem
        .space()
        .variables()
        .iter()
        .zip(&s.decision)
        .map(|(v, x)| format!("{}={x:.4}", v.name))
        .collect();
    format!(
        "NPV {:.2}, SSR {:.4} [{}]",
        s.objectives.values[0],
        s.objectives.values[1],
        vars.join(", ")
    )
}

fn optimize(a: &OptimizeArgs, out_dir: &Path, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let res = overrides_common(&a.config, a.cost, |f| {
        let o = &mut f.optimizer;
        if let Some(c) = a.case {
            o.case = c;
        }
        if let Some(al) = a.algo {
            o.algorithm = al;
        }
        if let Some(b) = a.budget {
            o.budget = b;
        }
        if let Some(s) = a.seed {
            o.seed = s;
        }
        if a.min_ssr.is_some() {
            o.min_ssr = a.min_ssr;
        }
    })?;
    let problem = optimize_problem(&res)?;
    let (algo, seed) = (res.file.optimizer.algorithm, res.file.optimizer.seed);
    let outcome = run_algorithm(&problem, &res, algo, seed)?;

    let path = resolve_out(out_dir, &a.out);
    write_archive(&problem, &outcome, &path)?;
    let stem = path.with_extension("");
    let telemetry = PathBuf::from(format!("{}_telemetry.csv", stem.display()));
    ressize_core::optimizer::write_telemetry_csv(&outcome.telemetry, create(&telemetry).map_err(rt)?).map_err(rt)?;

    let feasible = outcome.archive.sorted_by(SSR);
    let io = |e: std::io::Error| rt(e);
    writeln!(
        out,
        "case {} {} {}: {} evaluations, {} feasible archive entries",
        problem_case_label(&res),
        algo.as_str(),
        res.file.economics.cost_label(),
        outcome.evaluations,
        feasible.len()
    )
    .map_err(io)?;
    match feasible.last() {
        Some(hi) => {
            let max_npv = feasible
                .iter()
                .max_by(|x, y| x.objectives.values[0].total_cmp(&y.objectives.values[0]))
                .expect("non-empty");
            writeln!(out, "max NPV: {}", describe(&problem, max_npv)).map_err(io)?;
            writeln!(out, "max SSR: {}", describe(&problem, hi)).map_err(io)?;
        }
        None => writeln!(out, "no feasible solution found").map_err(io)?,
    }

    let mut report = RunReport::new("optimize", &res.digest);
    report.seed = Some(seed);
    report.archives.push(ArchiveRef {
        algorithm: algo.as_str().into(),
        path,
        seed,
        evaluations: outcome.evaluations,
        feasible_entries: feasible.len(),
        hypervolume: feasible_hypervolume(&outcome),
        reference: outcome.reference,
    });
    let elapsed = started.elapsed().as_secs_f64();
    report.timings.total_seconds = elapsed;
    report.timings.runs_seconds.push(elapsed);
    report
        .write(Path::new(&format!("{}_report.json", stem.display())))
        .map_err(rt)?;
    Ok(Outcome::Optimize(Box::new(report)))
}

fn problem_case_label(res: &Resolved) -> String {
    format!("{}{}", res.file.optimizer.case, res.file.economics.cost_letter())
}

impl crate::config::EconomicsSection {
    fn cost_label(&self) -> &'static str {
        match self.cost {
            CostScenario::Current => "current",
            CostScenario::Ultimate => "ultimate",
        }
    }

    fn cost_letter(&self) -> char {
        match self.cost {
            CostScenario::Current => 'C',
            CostScenario::Ultimate => 'U',
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn compare(a: &CompareArgs, out_dir: &Path, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let started = Instant::now();
    if a.runs == 0 {
        return Err(CliError::Config("runs: must be at least 1".into()));
    }
    let res = overrides_common(&a.config, a.cost, |f| {
        let o = &mut f.optimizer;
        if let Some(c) = a.case {
            o.case = c;
        }
        if let Some(b) = a.budget {
            o.budget = b;
        }
        if let Some(s) = a.seed {
            o.seed = s;
        }
        if a.min_ssr.is_some() {
            o.min_ssr = a.min_ssr;
        }
    })?;
    let problem = optimize_problem(&res)?;
    let dir = resolve_out(out_dir, &a.out);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(rt)?;

    let base_seed = res.file.optimizer.seed;
    let mut report = RunReport::new("compare", &res.digest);
    report.seed = Some(base_seed);
    let mut fronts = csv::Writer::from_writer(create(&dir.join("fronts.csv")).map_err(rt)?);
    fronts
        .write_record(["algorithm", "run", "npv", "ssr"])
        .map_err(rt)?;
    let mut summary = csv::Writer::from_writer(create(&dir.join("summary.csv")).map_err(rt)?);
    summary
        .write_record(["algorithm", "run", "seed", "evaluations", "feasible_entries", "hypervolume"])
        .map_err(rt)?;

    let algos = [Algorithm::Momfa, Algorithm::Nsga2];
    let mut hv: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for r in 0..a.runs {
        let seed = base_seed.wrapping_add(r as u64);
        for (k, algo) in algos.into_iter().enumerate() {
            let t = Instant::now();
            let outcome = run_algorithm(&problem, &res, algo, seed)?;
            report.timings.runs_seconds.push(t.elapsed().as_secs_f64());
            let path = dir.join(format!("{}_run{}.csv", algo.as_str(), r + 1));
            write_archive(&problem, &outcome, &path)?;
            let feasible = outcome.archive.sorted_by(SSR);
            for s in &feasible {
                fronts
                    .write_record([
                        algo.as_str().to_string(),
                        (r + 1).to_string(),
                        s.objectives.values[0].to_string(),
                        s.objectives.values[1].to_string(),
                    ])
                    .map_err(rt)?;
            }
            let h = feasible_hypervolume(&outcome);
            hv[k].push(h);
            summary
                .write_record([
                    algo.as_str().to_string(),
                    (r + 1).to_string(),
                    seed.to_string(),
                    outcome.evaluations.to_string(),
                    feasible.len().to_string(),
                    h.to_string(),
                ])
                .map_err(rt)?;
            report.archives.push(ArchiveRef {
                algorithm: algo.as_str().into(),
                path,
                seed,
                evaluations: outcome.evaluations,
                feasible_entries: feasible.len(),
                hypervolume: h,
                reference: outcome.reference,
            });
        }
    }
    for (k, algo) in algos.into_iter().enumerate() {
        summary
            .write_record([
                algo.as_str().to_string(),
                "median".into(),
                String::new(),
                String::new(),
                String::new(),
                median(&hv[k]).to_string(),
            ])
            .map_err(rt)?;
    }
    fronts.flush().map_err(rt)?;
    summary.flush().map_err(rt)?;

    let io = |e: std::io::Error| rt(e);
    writeln!(out, "{:<6} {:>6} {:>20}", "algo", "runs", "median_hypervolume").map_err(io)?;
    for (k, algo) in algos.into_iter().enumerate() {
        writeln!(out, "{:<6} {:>6} {:>20.6e}", algo.as_str(), a.runs, median(&hv[k])).map_err(io)?;
    }
    report.timings.total_seconds = started.elapsed().as_secs_f64();
    report.write(&dir.join("report.json")).map_err(rt)?;
    Ok(Outcome::Compare(Box::new(report)))
}
