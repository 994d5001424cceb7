//! The `padam` command-line front end.
//!
//! Subcommands: `run`, `sweep-p`, `compare`, `verify`. Every command
//! accepts a JSON config file (`--config`) whose keys mirror the long flags;
//! flags override the file. Exit codes: 0 success, 1 configuration error,
//! 2 divergence, 3 verification failure.

mod config;
pub mod suites;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::{load_config, ExperimentConfig, Overrides, Preset, DEFAULT_P_LIST, DEFAULT_STEPS};
pub use suites::Suite;

use crate::harness::{aggregate, final_summary, repeat_runs, write_atomic, write_trace, Aggregate, ScheduleKind, Trace};
use crate::optim::{OptimizerSpec, OPTIMIZER_NAMES};
use crate::theory::{CheckResult, CheckStatus, TheoryReport};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "padam", version, about = "Partially adaptive momentum optimizer: runs, sweeps, comparisons and theory checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimizer on one problem and write trace CSV + JSON metadata.
    Run(ExperimentArgs),
    /// Run Padam for each p in a list and write a long-format CSV.
    SweepP(SweepArgs),
    /// Run several optimizers on aligned seeds and write a summary table.
    Compare(CompareArgs),
    /// Run numerical check suites and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Constant,
    InvSqrt,
    Multistage,
}

impl From<ScheduleArg> for ScheduleKind {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Constant => ScheduleKind::Constant,
            ScheduleArg::InvSqrt => ScheduleKind::InvSqrt,
            ScheduleArg::Multistage => ScheduleKind::Multistage,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// quadratic, rosenbrock, logistic, sparse-growth or mlp.
    #[arg(long)]
    pub problem: Option<String>,
    /// padam, adam, amsgrad, sgdm, adagrad or adamw (default padam).
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    /// Comma-separated step indices for the multistage schedule.
    #[arg(long, value_delimiter = ',')]
    pub milestones: Option<Vec<u64>>,
    #[arg(long)]
    pub decay_factor: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of seeds (seed, seed + 1, ...).
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub record_dense: bool,
    /// Output directory.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Comma-separated values of p (default 0.4,0.25,0.2,0.125,0.0625).
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Comma-separated optimizer names (default: all six).
    #[arg(long, value_delimiter = ',')]
    pub optimizers: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Suites to run, comma-separated.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub suite: Vec<Suite>,
    /// Monte-Carlo seeds for the theorem suite.
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Horizons for the theorem suite.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub horizons: Vec<u64>,
    /// Random traces for the lemma suite.
    #[arg(long, default_value_t = 20)]
    pub traces: usize,
    /// Random points per problem for the gradient suite.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
}

impl ExperimentArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset,
            problem: self.problem.clone(),
            optimizer: self.optimizer.clone(),
            p: self.p,
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            schedule: self.schedule.map(Into::into),
            milestones: self.milestones.clone(),
            decay_factor: self.decay_factor,
            steps: self.steps,
            seed: self.seed,
            seeds: self.seeds,
            record_dense: self.record_dense,
            out_dir: self.out_dir.clone(),
            p_list: None,
            optimizers: None,
        }
    }

    fn base_config(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(path) => load_config(path),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

/// Outcome of a command before it is mapped to an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Diverged,
    VerificationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => EXIT_OK,
            Outcome::Diverged => EXIT_DIVERGED,
            Outcome::VerificationFailed => EXIT_VERIFY_FAILED,
        }
    }
}

/// Parse `args` (including the program name) and execute. Reports go to
/// `out`, errors and usage to stderr.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command, out) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::InvalidConfig(_)) {
                use clap::CommandFactory;
                let name = match cli.command {
                    Command::Run(_) => "run",
                    Command::SweepP(_) => "sweep-p",
                    Command::Compare(_) => "compare",
                    Command::Verify(_) => "verify",
                };
                if let Some(sub) = Cli::command().find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            EXIT_CONFIG
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Run(args) => {
            let cfg = args.base_config()?.resolve(&args.overrides())?;
            cmd_run(&cfg, out)
        }
        Command::SweepP(args) => {
            let mut o = args.experiment.overrides();
            o.p_list = args.p_list.clone();
            if o.optimizer.as_deref().is_some_and(|n| n != "padam") {
                return Err(Error::config("sweep-p runs padam only"));
            }
            o.optimizer.get_or_insert_with(|| "padam".to_string());
            let cfg = args.experiment.base_config()?.resolve(&o)?;
            cmd_sweep_p(&cfg, out)
        }
        Command::Compare(args) => {
            let mut o = args.experiment.overrides();
            o.optimizers = args.optimizers.clone();
            let overrides = Overrides {
                optimizer: None,
                p: None,
                beta1: None,
                beta2: None,
                epsilon: None,
                momentum: None,
                weight_decay: None,
                lr: None,
                ..o.clone()
            };
            let cfg = args.experiment.base_config()?.resolve(&overrides)?;
            cmd_compare(&cfg, &o, out)
        }
        Command::Verify(args) => cmd_verify(args, out),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn write_aggregate_csv(rows: &[Aggregate], path: &Path) -> Result<()> {
    let mut text = String::from("t,n,mean_loss,mean_grad_norm_sq\n");
    for r in rows {
        text.push_str(&format!("{},{},{:.16e},{:.16e}\n", r.t, r.n, r.mean_loss, r.mean_grad_norm_sq));
    }
    write_atomic(path, text.as_bytes())
}

fn run_batch(cfg: &ExperimentConfig) -> Result<Vec<Trace>> {
    let spec = cfg.run_spec()?;
    let problem = spec.problem.build()?;
    repeat_runs(problem.as_ref(), &spec, cfg.seeds)
}

/// Run the configured batch; write one trace per seed, plus per-step
/// aggregates and a summary when there is more than one seed.
pub fn cmd_run(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    ensure_dir(&cfg.out_dir)?;
    let traces = run_batch(cfg)?;
    let spec = cfg.run_spec()?;
    let stem = format!("{}_{}", spec.problem.name(), spec.optimizer.name());
    for trace in &traces {
        let path = cfg.out_dir.join(format!("{stem}_seed{}.csv", trace.meta.seed));
        write_trace(trace, &path)?;
        let last = trace.last();
        writeln!(
            out,
            "seed {:>6}  steps {:>7}  final loss {:.6e}  final |grad|^2 {:.6e}{}",
            trace.meta.seed,
            trace.len(),
            last.map_or(f64::NAN, |r| r.loss),
            last.map_or(f64::NAN, |r| r.grad_norm_sq),
            if trace.meta.diverged { "  DIVERGED" } else { "" }
        )?;
    }
    if traces.len() > 1 {
        write_aggregate_csv(&aggregate(&traces), &cfg.out_dir.join(format!("{stem}_aggregate.csv")))?;
        let summary = final_summary(&traces);
        write_json(
            &serde_json::json!({ "config": cfg, "summary": summary }),
            &cfg.out_dir.join(format!("{stem}_summary.json")),
        )?;
        writeln!(
            out,
            "{} seeds: final loss {:.6e} +- {:.3e}, final |grad|^2 {:.6e} +- {:.3e}, diverged {}",
            summary.n, summary.loss_mean, summary.loss_std, summary.grad_norm_sq_mean, summary.grad_norm_sq_std, summary.n_diverged
        )?;
    }
    Ok(if traces.iter().any(|t| t.meta.diverged) {
        Outcome::Diverged
    } else {
        Outcome::Ok
    })
}

/// One batch per p; long-format CSV `p,t,mean_loss,mean_grad_norm_sq`.
pub fn cmd_sweep_p(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    if cfg.p_list.is_empty() {
        return Err(Error::config("p list is empty"));
    }
    if let Some(p) = cfg.p_list.iter().find(|p| !(0.0..=0.5).contains(*p)) {
        return Err(Error::config(format!("p = {p} outside [0, 1/2]")));
    }
    let Some(OptimizerSpec::Padam { beta1, beta2, epsilon, .. }) = cfg.optimizer.clone() else {
        return Err(Error::config("sweep-p needs a padam optimizer"));
    };
    ensure_dir(&cfg.out_dir)?;
    let mut text = String::from("p,t,mean_loss,mean_grad_norm_sq\n");
    let mut diverged = false;
    for &p in &cfg.p_list {
        let variant = ExperimentConfig {
            optimizer: Some(OptimizerSpec::Padam { beta1, beta2, p, epsilon }),
            ..cfg.clone()
        };
        let traces = run_batch(&variant)?;
        diverged |= traces.iter().any(|t| t.meta.diverged);
        for row in aggregate(&traces) {
            text.push_str(&format!("{p},{},{:.16e},{:.16e}\n", row.t, row.mean_loss, row.mean_grad_norm_sq));
        }
        let s = final_summary(&traces);
        writeln!(out, "p = {p:<8} final loss {:.6e} +- {:.3e}  diverged {}", s.loss_mean, s.loss_std, s.n_diverged)?;
    }
    write_atomic(&cfg.out_dir.join("sweep_p.csv"), text.as_bytes())?;
    write_json(&serde_json::json!({ "config": cfg }), &cfg.out_dir.join("sweep_p.json"))?;
    Ok(if diverged { Outcome::Diverged } else { Outcome::Ok })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub optimizer: String,
    pub lr: f64,
    pub n: usize,
    pub n_diverged: usize,
    pub loss_mean: f64,
    pub loss_std: f64,
    pub grad_norm_sq_mean: f64,
    pub grad_norm_sq_std: f64,
}

/// Aligned-seed batches per optimizer, summarised by final loss and squared
/// gradient norm.
pub fn compare_rows(cfg: &ExperimentConfig, overrides: &Overrides) -> Result<Vec<CompareRow>> {
    if cfg.optimizers.is_empty() {
        return Err(Error::config("optimizer list is empty"));
    }
    for name in &cfg.optimizers {
        if !OPTIMIZER_NAMES.contains(&name.as_str()) {
            return Err(Error::config(format!(
                "unknown optimizer `{name}`; valid names: {}",
                OPTIMIZER_NAMES.join(", ")
            )));
        }
    }
    cfg.optimizers
        .iter()
        .map(|name| {
            let (optimizer, schedule) = cfg.optimizer_variant(name, overrides)?;
            let variant = ExperimentConfig {
                optimizer: Some(optimizer),
                schedule: Some(schedule.clone()),
                ..cfg.clone()
            };
            let s = final_summary(&run_batch(&variant)?);
            Ok(CompareRow {
                optimizer: name.clone(),
                lr: schedule.base_lr,
                n: s.n,
                n_diverged: s.n_diverged,
                loss_mean: s.loss_mean,
                loss_std: s.loss_std,
                grad_norm_sq_mean: s.grad_norm_sq_mean,
                grad_norm_sq_std: s.grad_norm_sq_std,
            })
        })
        .collect()
}

pub fn cmd_compare(cfg: &ExperimentConfig, overrides: &Overrides, out: &mut dyn Write) -> Result<Outcome> {
    let rows = compare_rows(cfg, overrides)?;
    ensure_dir(&cfg.out_dir)?;
    let mut text = String::from("optimizer,lr,n,n_diverged,loss_mean,loss_std,grad_norm_sq_mean,grad_norm_sq_std\n");
    writeln!(out, "{:<10} {:>8} {:>4} {:>24} {:>24}", "optimizer", "lr", "div", "final loss", "final |grad|^2")?;
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.optimizer, r.lr, r.n, r.n_diverged, r.loss_mean, r.loss_std, r.grad_norm_sq_mean, r.grad_norm_sq_std
        ));
        writeln!(
            out,
            "{:<10} {:>8} {:>4} {:>12.5e} +- {:<9.2e} {:>12.5e} +- {:<9.2e}",
            r.optimizer, r.lr, r.n_diverged, r.loss_mean, r.loss_std, r.grad_norm_sq_mean, r.grad_norm_sq_std
        )?;
    }
    write_atomic(&cfg.out_dir.join("compare.csv"), text.as_bytes())?;
    write_json(&serde_json::json!({ "config": cfg, "rows": rows }), &cfg.out_dir.join("compare.json"))?;
    Ok(Outcome::Ok)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<BTreeMap<String, CheckResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Vec<TheoryReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reductions: Option<BTreeMap<String, CheckResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradients: Option<BTreeMap<String, CheckResult>>,
}

fn print_checks(out: &mut dyn Write, suite: &str, checks: &BTreeMap<String, CheckResult>) -> Result<bool> {
    let mut ok = true;
    for (name, r) in checks {
        ok &= r.status != CheckStatus::Fail;
        writeln!(out, "[{suite}] {name:<24} {:<12} margin {:.3e} {}", format!("{:?}", r.status).to_lowercase(), r.worst_margin, r.note)?;
    }
    Ok(ok)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<Outcome> {
    let mut suites = args.suite.clone();
    suites.sort();
    suites.dedup();
    let mut report = VerifyReport {
        passed: true,
        ..VerifyReport::default()
    };
    for suite in suites {
        match suite {
            Suite::Lemmas => {
                let checks = suites::lemmas_suite(args.traces, args.seed)?;
                report.passed &= print_checks(out, "lemmas", &checks)?;
                report.lemmas = Some(checks);
            }
            Suite::Theorem => {
                if args.seeds == 0 {
                    return Err(Error::config("--seeds must be >= 1"));
                }
                let reports = suites::theorem_suite(&args.horizons, args.seeds, args.seed)?;
                for r in &reports {
                    report.passed &= r.status != CheckStatus::Fail
                        && r.lemma_checks.values().all(|c| c.status != CheckStatus::Fail);
                    writeln!(
                        out,
                        "[theorem] T = {:<7} {:<12} E|grad f(x_out)|^2 = {:.4e}  bound = {:.4e}  ratio = {:.2e}{}",
                        r.steps,
                        format!("{:?}", r.status).to_lowercase(),
                        r.empirical_lhs,
                        r.bound_41,
                        r.ratio,
                        if r.extremely_loose { "  (extremely loose)" } else { "" }
                    )?;
                }
                report.theorem = Some(reports);
            }
            Suite::Reductions => {
                let checks = suites::reductions_suite()?;
                report.passed &= print_checks(out, "reductions", &checks)?;
                report.reductions = Some(checks);
            }
            Suite::Gradients => {
                let checks = suites::gradients_suite(args.points, args.seed)?;
                report.passed &= print_checks(out, "gradients", &checks)?;
                report.gradients = Some(checks);
            }
        }
    }
    ensure_dir(&args.out_dir)?;
    write_json(&report, &args.out_dir.join("verify_report.json"))?;
    writeln!(out, "{}", if report.passed { "all applicable checks passed" } else { "VERIFICATION FAILED" })?;
    Ok(if report.passed {
        Outcome::Ok
    } else {
        Outcome::VerificationFailed
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn missing_problem_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().to_str().unwrap();
        let code = main_with_args(["padam", "run", "--out-dir", out_dir], &mut Vec::new());
        assert_eq!(code, EXIT_CONFIG);
        let code = main_with_args(["padam", "run", "--bogus"], &mut Vec::new());
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn sweep_rejects_p_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let code = main_with_args(
            ["padam", "sweep-p", "--problem", "quadratic", "--p-list", "0.1,0.7", "--out-dir", dir.path().to_str().unwrap()],
            &mut Vec::new(),
        );
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn compare_rejects_unknown_optimizer() {
        let dir = tempfile::tempdir().unwrap();
        let code = main_with_args(
            ["padam", "compare", "--problem", "quadratic", "--optimizers", "padam,yogi", "--out-dir", dir.path().to_str().unwrap()],
            &mut Vec::new(),
        );
        assert_eq!(code, EXIT_CONFIG);
    }
}
