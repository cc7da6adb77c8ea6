//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 validation failure (malformed
//! model, violated assumption, failed agreement check), 3 budget or horizon
//! failure, 4 usage error. Errors are reported as one line on stderr:
//! `error: <kind>: <message>`.

pub mod model_file;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{binary_specialize, dominance_check, BoundsReport, BoundsSettings};
use crate::convex::ConvexSettings;
use crate::error::{Error, Result};
use crate::oracle::{agreement_suite, AGREEMENT_SIGMAS};
use crate::policy::{PolicyKind, DEFAULT_PHASE_THRESHOLD};
use crate::simulator::{
    estimate_error_exponent, run_trials, run_trials_with_records, sweep_l, BudgetMatching, PolicySpec,
};
use crate::{Model, Rule};

use output::{fmt_float, manifest_path, sha256_hex, unix_now, RunManifest, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "active-ht",
    version,
    about = "Active M-ary hypothesis testing: bounds, policies and simulation"
)]
pub struct Cli {
    /// Worker threads for trial execution (default: all cores).
    #[arg(long, global = true, env = "ACTIVE_HT_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file; exits 0 iff every pair of hypotheses is distinguishable.
    Validate { model: PathBuf },
    /// Reliability coefficients, theorem bounds, gains and exponents.
    Bounds {
        model: PathBuf,
        /// Simplex grid resolution for D̂.
        #[arg(long)]
        grid: Option<f64>,
        /// Also write the coefficient table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo summary of one policy.
    Simulate {
        model: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Write one CSV row per trial.
        #[arg(long)]
        trials_csv: Option<PathBuf>,
    },
    /// Cost versus L for one policy family.
    Sweep {
        model: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Comma-separated, strictly increasing penalties.
        #[arg(long = "L", value_delimiter = ',', required = true)]
        penalties: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Empirical error exponent from budget-matched runs.
    Exponents {
        model: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Comma-separated, strictly increasing expected-sample budgets.
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sequentiality and adaptivity gains plus the dominance check.
    Gains {
        model: PathBuf,
        #[arg(long)]
        grid: Option<f64>,
    },
    /// Two-hypothesis closed forms and the adaptivity-gain predicate.
    Binary { model: PathBuf },
    /// Exact evaluation versus Monte Carlo on fixed-horizon policies.
    OracleCheck {
        model: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Nn,
    Sn,
    Sa,
    Fixed,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Nn => PolicyKind::Nn,
            PolicyArg::Sn => PolicyKind::Sn,
            PolicyArg::Sa => PolicyKind::Sa,
            PolicyArg::Fixed => PolicyKind::Fixed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    /// Comma-separated action weights of a fixed policy.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Belief level at which the two-phase policy leaves its first phase.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Fixed policies: stop after this many steps instead of at posterior error 1/L.
    #[arg(long)]
    pub fixed_n: Option<usize>,
    /// Simplex grid resolution for D̂.
    #[arg(long)]
    pub grid: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Write the CSV here (with a manifest next to it) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PolicyArgs {
    fn spec(&self) -> Result<PolicySpec> {
        let kind = PolicyKind::from(self.policy);
        if kind != PolicyKind::Fixed && (self.lambda.is_some() || self.fixed_n.is_some()) {
            return Err(Error::Argument(
                "--lambda and --fixed-n apply to --policy fixed only".into(),
            ));
        }
        if kind != PolicyKind::Sa && self.threshold.is_some() {
            return Err(Error::Argument("--threshold applies to --policy sa only".into()));
        }
        let lambda = match &self.lambda {
            Some(w) => Some(Rule::new(w.clone())?),
            None if kind == PolicyKind::Fixed => {
                return Err(Error::Argument("--policy fixed needs --lambda".into()))
            }
            None => None,
        };
        Ok(PolicySpec {
            kind,
            lambda,
            phase_threshold: self.threshold,
            fixed_n: self.fixed_n,
        })
    }

    fn settings(&self) -> BoundsSettings {
        BoundsSettings {
            grid_resolution: self.grid,
            ..BoundsSettings::default()
        }
    }

    fn record(&self, params: &mut BTreeMap<String, String>) {
        params.insert("policy".into(), PolicyKind::from(self.policy).name().into());
        if let Some(w) = &self.lambda {
            params.insert("lambda".into(), join(w));
        }
        params.insert(
            "phase_threshold".into(),
            fmt_float(self.threshold.unwrap_or(DEFAULT_PHASE_THRESHOLD)),
        );
        if let Some(n) = self.fixed_n {
            params.insert("fixed_n".into(), n.to_string());
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(",")
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Parse(_) | Error::Assumption(_) => 2,
        Error::Budget(_) | Error::Horizon(_) => 3,
        Error::Argument(_) | Error::Index { .. } | Error::Domain(_) => 4,
        Error::Io(_) | Error::ImpossibleObservation | Error::UndefinedOdds => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Index { .. } => "index",
        Error::Argument(_) => "argument",
        Error::Domain(_) => "domain",
        Error::Validation(_) => "validation",
        Error::Assumption(_) => "assumption",
        Error::ImpossibleObservation => "impossible-observation",
        Error::UndefinedOdds => "undefined-odds",
        Error::Budget(_) => "budget",
        Error::Horizon(_) => "horizon",
        Error::Io(_) => "io",
        Error::Parse(_) => "parse",
    }
}

/// Single-line, machine-parsable error report.
pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace(['\n', '\r'], " ");
    format!("error: {}: {msg}", error_kind(e))
}

/// Parses `argv` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let text = e.to_string();
                    let first = text
                        .lines()
                        .find(|l| !l.trim().is_empty())
                        .unwrap_or("invalid arguments");
                    let first = first.trim_start_matches("error: ");
                    eprintln!("error: usage: {first}");
                    4
                }
            };
        }
    };
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let go = || {
        let mut out = std::io::stdout().lock();
        let r = execute(&cli.command, &args, &mut out);
        let _ = out.flush();
        r
    };
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Argument(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(go)),
        None => go(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            exit_code(&e)
        }
    }
}

struct Context {
    manifest: RunManifest,
}

impl Context {
    fn new(command: &str, argv: &[String], model_path: &Path, model_bytes: &[u8]) -> Self {
        Self {
            manifest: RunManifest {
                artifact_version: VERSION.to_string(),
                command: command.to_string(),
                argv: argv.to_vec(),
                parameters: BTreeMap::new(),
                model_path: model_path.display().to_string(),
                model_sha256: sha256_hex(model_bytes),
                master_seed: None,
                solver: solver_settings(),
                policies: Vec::new(),
                outputs: Vec::new(),
                started_unix: unix_now(),
                finished_unix: 0,
            },
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.manifest
            .parameters
            .insert(key.to_string(), value.to_string());
    }

    /// Writes a table to `path`, or to stdout when no path is given.
    fn emit(&mut self, table: &Table, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
        match path {
            Some(p) => {
                std::fs::write(p, table.to_csv())?;
                self.manifest.outputs.push(p.display().to_string());
            }
            None => out.write_all(table.to_csv().as_bytes())?,
        }
        Ok(())
    }

    /// Writes one manifest per emitted file.
    fn finish(mut self) -> Result<()> {
        self.manifest.finished_unix = unix_now();
        let text = self.manifest.to_toml();
        for p in &self.manifest.outputs {
            std::fs::write(manifest_path(Path::new(p)), &text)?;
        }
        Ok(())
    }
}

fn solver_settings() -> BTreeMap<String, String> {
    let c = ConvexSettings::default();
    let b = BudgetMatching::default();
    [
        ("convex_random_starts", c.random_starts.to_string()),
        ("convex_seed", c.seed.to_string()),
        ("convex_patience", c.patience.to_string()),
        ("convex_max_iterations", c.max_iterations.to_string()),
        ("kl_cap", fmt_float(crate::bounds::KL_CAP)),
        (
            "hypothesis_sampling",
            "stratified by trial index mod M".to_string(),
        ),
        ("pe_estimator", "mean terminal posterior error".to_string()),
        ("summary_merge", "exact fixed-point sums".to_string()),
        ("rng", "ChaCha8, stream = trial index".to_string()),
        ("budget_matching_tolerance", fmt_float(b.tolerance)),
        ("budget_matching_probe_trials", b.probe_trials.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn load(path: &Path) -> Result<(Model, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Parse("model file is not UTF-8".into()))?;
    Ok((model_file::parse_model(text)?, bytes))
}

fn write_text(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn toml_text<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("reports always serialize")
}

fn execute(command: &Command, argv: &[String], out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Validate { model } => validate(model, out),
        Command::Bounds { model, grid, csv } => bounds(model, *grid, csv.as_deref(), argv, out),
        Command::Simulate {
            model,
            policy,
            run,
            trials_csv,
        } => simulate(model, policy, run, trials_csv.as_deref(), argv, out),
        Command::Sweep {
            model,
            policy,
            penalties,
            run,
        } => sweep(model, policy, penalties, run, argv, out),
        Command::Exponents {
            model,
            policy,
            budgets,
            run,
        } => exponents(model, policy, budgets, run, argv, out),
        Command::Gains { model, grid } => gains(model, *grid, out),
        Command::Binary { model } => binary(model, out),
        Command::OracleCheck {
            model,
            horizon,
            trials,
            seed,
            out: path,
        } => oracle_check(model, *horizon, *trials, *seed, path.as_deref(), argv, out),
    }
}

fn validate(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let (model, _) = load(path)?;
    let report = model.validate();
    let pairs: Vec<String> = report
        .indistinguishable_pairs
        .iter()
        .map(|(i, j)| format!("({},{})", i + 1, j + 1))
        .collect();
    let text = format!(
        "hypotheses: {}\nactions: {}\nkernel: {}\ndistinguishable: {}\nindistinguishable pairs: {}\nlikelihood ratio bound: {}\nbounded likelihood ratio: {}\nprior positive: {}\n",
        model.num_hypotheses(),
        model.num_actions(),
        match model.kernel_type() {
            crate::model::KernelType::Finite => "finite",
            crate::model::KernelType::Gaussian => "gaussian",
        },
        report.distinguishable(),
        if pairs.is_empty() { "none".to_string() } else { pairs.join(" ") },
        fmt_float(report.likelihood_ratio_bound),
        report.bounded_likelihood_ratio(),
        report.prior_positive,
    );
    write_text(out, &text)?;
    Ok(if report.usable() { 0 } else { 2 })
}

/// CSV rows of a bounds report: name, value, lambda_1..lambda_K, certificate.
pub fn bounds_table(report: &BoundsReport, k: usize) -> Table {
    let mut header = vec!["name".to_string(), "value".to_string()];
    header.extend((1..=k).map(|a| format!("lambda_{a}")));
    header.push("certificate".into());
    let mut table = Table::new(header);
    for row in report.rows() {
        let mut cells = vec![row.name, fmt_float(row.value)];
        match row.lambda {
            Some(l) => cells.extend(l.iter().map(|w| fmt_float(*w))),
            None => cells.extend(std::iter::repeat_n(String::new(), k)),
        }
        cells.push(row.certificate);
        table.push(cells);
    }
    table
}

#[derive(Serialize)]
struct CoefficientView {
    name: String,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<Vec<f64>>,
    certificate: String,
}

#[derive(Serialize)]
struct BoundsView {
    hypotheses: usize,
    actions: usize,
    #[serde(rename = "L")]
    penalty: f64,
    kl_capped: bool,
    unbounded_likelihood_ratio: bool,
    lower_exceeds_upper: bool,
    harmonic_grid_certified: Option<bool>,
    /// One-based.
    na_hypothesis: usize,
    ordering_violations: Vec<String>,
    coefficient: Vec<CoefficientView>,
}

fn bounds(
    path: &Path,
    grid: Option<f64>,
    csv: Option<&Path>,
    argv: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let (model, bytes) = load(path)?;
    let settings = BoundsSettings {
        grid_resolution: grid,
        ..BoundsSettings::default()
    };
    let report = BoundsReport::compute(&model, &settings)?;
    let view = BoundsView {
        hypotheses: model.num_hypotheses(),
        actions: model.num_actions(),
        penalty: model.penalty(),
        kl_capped: report.kl_capped,
        unbounded_likelihood_ratio: report.unbounded_likelihood_ratio,
        lower_exceeds_upper: report.thm_bounds.lower_exceeds_upper,
        harmonic_grid_certified: report.max_r_bar.grid_certified,
        na_hypothesis: report.thm_bounds.na_hypothesis + 1,
        ordering_violations: report.ordering_violations(),
        coefficient: report
            .rows()
            .into_iter()
            .map(|r| CoefficientView {
                name: r.name,
                value: r.value,
                lambda: r.lambda,
                certificate: r.certificate,
            })
            .collect(),
    };
    write_text(out, &toml_text(&view))?;
    if let Some(p) = csv {
        let mut ctx = Context::new("bounds", argv, path, &bytes);
        if let Some(h) = grid {
            ctx.param("grid", fmt_float(h));
        }
        ctx.emit(&bounds_table(&report, model.num_actions()), Some(p), out)?;
        ctx.finish()?;
    }
    Ok(0)
}

fn prepare(
    command: &str,
    path: &Path,
    policy: &PolicyArgs,
    run: &RunArgs,
    argv: &[String],
) -> Result<(Model, Option<BoundsReport>, PolicySpec, Context)> {
    let (model, bytes) = load(path)?;
    let spec = policy.spec()?;
    let settings = policy.settings();
    let bounds = if spec.needs_bounds() {
        Some(BoundsReport::compute(&model, &settings)?)
    } else {
        None
    };
    let mut ctx = Context::new(command, argv, path, &bytes);
    policy.record(&mut ctx.manifest.parameters);
    ctx.param("trials", run.trials);
    if let Some(h) = policy.grid {
        ctx.param("grid", fmt_float(h));
    }
    ctx.manifest.master_seed = Some(run.seed);
    Ok((model, bounds, spec, ctx))
}

const SUMMARY_HEADER: [&str; 14] = [
    "policy",
    "L",
    "trials",
    "mean_tau",
    "se_tau",
    "pe",
    "se_pe",
    "cost",
    "se_cost",
    "error_rate",
    "se_error_rate",
    "truncated",
    "seed",
    "manifest",
];

fn simulate(
    path: &Path,
    policy_args: &PolicyArgs,
    run: &RunArgs,
    trials_csv: Option<&Path>,
    argv: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let (model, bounds, spec, mut ctx) = prepare("simulate", path, policy_args, run, argv)?;
    let policy = spec.build(&model, bounds.as_ref())?;
    ctx.manifest.policies.push(policy.descriptor().clone());
    let (summary, records) = if trials_csv.is_some() {
        let (s, r) = run_trials_with_records(&model, &policy, run.trials, run.seed)?;
        (s, Some(r))
    } else {
        (run_trials(&model, &policy, run.trials, run.seed)?, None)
    };
    let manifest_name = |p: Option<&Path>| {
        p.map(|p| manifest_path(p).display().to_string())
            .unwrap_or_default()
    };
    let mut table = Table::new(SUMMARY_HEADER);
    table.push(vec![
        policy.kind().name().to_string(),
        fmt_float(model.penalty()),
        summary.trials.to_string(),
        fmt_float(summary.mean_tau()),
        fmt_float(summary.se_tau()),
        fmt_float(summary.pe()),
        fmt_float(summary.se_pe()),
        fmt_float(summary.cost()),
        fmt_float(summary.se_cost()),
        fmt_float(summary.error_rate()),
        fmt_float(summary.se_error_rate()),
        summary.truncated.to_string(),
        run.seed.to_string(),
        manifest_name(run.out.as_deref()),
    ]);
    ctx.emit(&table, run.out.as_deref(), out)?;
    if let (Some(p), Some(records)) = (trials_csv, records) {
        let mut t = Table::new([
            "index",
            "true_hypothesis",
            "stopping_time",
            "declared",
            "correct",
            "posterior_error",
            "truncated",
            "seed",
        ]);
        for r in records {
            t.push(vec![
                r.index.to_string(),
                (r.true_hypothesis + 1).to_string(),
                r.stopping_time.to_string(),
                (r.declared + 1).to_string(),
                r.correct.to_string(),
                fmt_float(r.posterior_error),
                r.truncated.to_string(),
                r.seed.to_string(),
            ]);
        }
        ctx.emit(&t, Some(p), out)?;
    }
    ctx.finish()?;
    Ok(0)
}

fn sweep(
    path: &Path,
    policy_args: &PolicyArgs,
    penalties: &[f64],
    run: &RunArgs,
    argv: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let (model, bounds, spec, mut ctx) = prepare("sweep", path, policy_args, run, argv)?;
    ctx.param("L", join(penalties));
    let rows = sweep_l(&model, bounds.as_ref(), &spec, penalties, run.trials, run.seed)?;
    for &l in penalties {
        let at_l = model.with_penalty(l)?;
        ctx.manifest
            .policies
            .push(spec.build(&at_l, bounds.as_ref())?.descriptor().clone());
    }
    let mut table = Table::new([
        "L",
        "logL",
        "mean_tau",
        "se_tau",
        "pe",
        "se_pe",
        "cost",
        "cost_over_logL",
    ]);
    for r in &rows {
        let s = &r.summary;
        table.push(vec![
            fmt_float(r.penalty),
            fmt_float(r.log_l),
            fmt_float(s.mean_tau()),
            fmt_float(s.se_tau()),
            fmt_float(s.pe()),
            fmt_float(s.se_pe()),
            fmt_float(s.cost()),
            fmt_float(r.cost_over_log_l()),
        ]);
    }
    ctx.emit(&table, run.out.as_deref(), out)?;
    ctx.finish()?;
    Ok(0)
}

#[derive(Serialize)]
struct ExponentView {
    policy: String,
    slope: f64,
    stderr: f64,
    lower_bound_only: bool,
    budget_tolerance: f64,
    probe_trials: u64,
}

fn exponents(
    path: &Path,
    policy_args: &PolicyArgs,
    budgets: &[f64],
    run: &RunArgs,
    argv: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let (model, bounds, spec, mut ctx) = prepare("exponents", path, policy_args, run, argv)?;
    ctx.param("budgets", join(budgets));
    let bounds =
        bounds.ok_or_else(|| Error::Argument("exponent budgets set the horizon; drop --fixed-n".into()))?;
    let matching = BudgetMatching::default();
    let est = estimate_error_exponent(&model, &bounds, &spec, budgets, run.trials, run.seed, &matching)?;
    let mut table = Table::new([
        "budget",
        "L",
        "matched",
        "mean_tau",
        "pe",
        "se_pe",
        "neg_log_pe",
        "floored",
    ]);
    for p in &est.points {
        table.push(vec![
            fmt_float(p.budget),
            fmt_float(p.penalty),
            p.matched.to_string(),
            fmt_float(p.mean_tau),
            fmt_float(p.pe),
            fmt_float(p.se_pe),
            fmt_float(-p.pe.ln()),
            p.floored.to_string(),
        ]);
    }
    let view = ExponentView {
        policy: spec.kind.name().to_string(),
        slope: est.slope,
        stderr: est.stderr,
        lower_bound_only: est.lower_bound_only,
        budget_tolerance: matching.tolerance,
        probe_trials: matching.probe_trials,
    };
    match run.out.as_deref() {
        Some(p) => {
            write_text(out, &toml_text(&view))?;
            ctx.emit(&table, Some(p), out)?;
        }
        None => {
            write_text(out, &toml_text(&view))?;
            write_text(out, "\n")?;
            ctx.emit(&table, None, out)?;
        }
    }
    ctx.finish()?;
    Ok(0)
}

fn gains(path: &Path, grid: Option<f64>, out: &mut dyn Write) -> Result<i32> {
    let (model, _) = load(path)?;
    let settings = BoundsSettings {
        grid_resolution: grid,
        ..BoundsSettings::default()
    };
    let report = BoundsReport::compute(&model, &settings)?;
    let g = &report.gains;
    let dominant = dominance_check(&model);
    let text = format!(
        "sequentiality gain per log L (lower bound): {}\nadaptivity gain per log L: {}\nzero adaptivity gain: {}\ndominating action: {}\n",
        fmt_float(g.sequentiality),
        fmt_float(g.adaptivity),
        g.zero_adaptivity,
        dominant.map_or("none".to_string(), |a| (a + 1).to_string()),
    );
    write_text(out, &text)?;
    Ok(0)
}

fn one_based(v: &[usize]) -> String {
    v.iter()
        .map(|a| (a + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn binary(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let (model, _) = load(path)?;
    let b = binary_specialize(&model)?;
    let text = format!(
        "D(q1||q2) per action: {}\nD(q2||q1) per action: {}\nR(1,lambda*_1): {}\nR(2,lambda*_2): {}\nR-bar*: {}\nmax R-bar: {}\nargmax actions for hypothesis 1: {}\nargmax actions for hypothesis 2: {}\nlogarithmic adaptivity gain: {}\nclosed forms match generic solvers: {}\n",
        join(&b.kl_12),
        join(&b.kl_21),
        fmt_float(b.r1_star),
        fmt_float(b.r2_star),
        fmt_float(b.r_bar_star),
        fmt_float(b.r_bar_at_optimum),
        one_based(&b.argmax_12),
        one_based(&b.argmax_21),
        b.logarithmic_adaptivity_gain,
        b.generic_matches,
    );
    write_text(out, &text)?;
    Ok(0)
}

fn oracle_check(
    path: &Path,
    horizon: usize,
    trials: u64,
    seed: u64,
    csv: Option<&Path>,
    argv: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let (model, bytes) = load(path)?;
    let rows = agreement_suite(&model, horizon, trials, seed)?;
    let mut ctx = Context::new("oracle-check", argv, path, &bytes);
    ctx.param("horizon", horizon);
    ctx.param("trials", trials);
    ctx.param("agreement_sigmas", fmt_float(AGREEMENT_SIGMAS));
    ctx.manifest.master_seed = Some(seed);
    let mut table = Table::new([
        "policy",
        "exact_pe",
        "oracle_gap",
        "mc_pe",
        "mc_se",
        "z",
        "exact_mean_tau",
        "mc_mean_tau",
        "agrees",
    ]);
    for r in &rows {
        table.push(vec![
            r.policy.clone(),
            fmt_float(r.exact_pe),
            fmt_float(r.oracle_gap),
            fmt_float(r.mc_pe),
            fmt_float(r.mc_se),
            fmt_float(r.z_score()),
            fmt_float(r.exact_mean_tau),
            fmt_float(r.mc_mean_tau),
            r.agrees().to_string(),
        ]);
    }
    ctx.emit(&table, csv, out)?;
    ctx.finish()?;
    Ok(if rows.iter().all(|r| r.agrees()) { 0 } else { 2 })
}
