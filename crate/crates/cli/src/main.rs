//! `irs-relay` command-line interface.
//!
//! Exit codes: 0 on success, 1 when a verification property fails, 2 on
//! usage or configuration errors. Results go to stdout, diagnostics to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use irs_relay::channel::{generate_channels, trial_rng};
use irs_relay::optimizer::{select_mode, solve_fd, solve_hd};
use irs_relay::sim;
use irs_relay::suites::{self, SuiteOptions};
use irs_relay::{ScenarioConfig, SolveOptions, SweepSpec, TrScale};

#[derive(Parser, Debug)]
#[command(name = "irs-relay", version, about = "Robust IRS-assisted full-duplex relay design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one realization and print the selected mode as JSON.
    Solve(ScenarioArgs),
    /// Run a parameter sweep described by a sweep spec file.
    Sweep(SweepArgs),
    /// Per-trial FD/HD switching thresholds over a T_r grid.
    Threshold(ThresholdArgs),
    /// Run a named property suite.
    Verify(VerifyArgs),
    /// Histogram of inner-loop iteration counts.
    Convergence(ScenarioArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-path override `KEY=VALUE` into the scenario config, repeatable.
    #[arg(long = "override", value_name = "K=V")]
    overrides: Vec<String>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// How `t_bounds.r` is read: `normalized` (fraction of Tr(H_r H_rᴴ), the
    /// default) or `absolute`. For sweeps this replaces the spec's setting.
    #[arg(long, value_parser = parse_scale)]
    tr_scale: Option<TrScale>,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Also write the JSON result document here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated ascending T_r grid.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.4,0.5,0.6,0.8,1")]
    grid: Vec<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite name, or `all`.
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Adversary samples per instance for `theorem1`.
    #[arg(long)]
    samples: Option<usize>,
    /// Trials for the scenario-level suites.
    #[arg(long)]
    trials: Option<usize>,
    /// Output file for the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scale(s: &str) -> Result<TrScale, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("expected normalized or absolute, got {s:?}"))
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Property,
}

impl From<irs_relay::Error> for Failure {
    fn from(e: irs_relay::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Sets `path` (dot separated) inside `doc`. The value is parsed as JSON,
/// falling back to a plain string.
fn apply_override(doc: &mut Value, spec: &str) -> Result<(), Failure> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| Failure::Usage(format!("override {spec:?} is not K=V")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Failure::Usage(format!("override {key:?}: {} is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| json!({}));
    }
    Err(Failure::Usage(format!("override {spec:?} has an empty key")))
}

fn load_scenario(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut doc = match &common.config {
        Some(p) => read_json(p)?,
        None => serde_json::to_value(ScenarioConfig::default()).expect("default config serializes"),
    };
    for o in &common.overrides {
        apply_override(&mut doc, o)?;
    }
    let mut cfg: ScenarioConfig =
        serde_json::from_value(doc).map_err(|e| Failure::Usage(format!("invalid scenario config: {e}")))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn cmd_solve(args: &ScenarioArgs) -> Result<(), Failure> {
    let cfg = load_scenario(&args.common)?;
    let mut ch = generate_channels(&cfg, &mut trial_rng(cfg.seed, 0))?;
    if args.common.tr_scale.unwrap_or_default() == TrScale::Normalized {
        ch.t_bounds.tr *= ch.hr_power();
    }
    let opts = SolveOptions::default();
    let fd = solve_fd(&cfg, &ch, &opts)?;
    let hd = solve_hd(&cfg, &ch)?;
    let sel = select_mode(&fd, &hd);
    let doc = json!({
        "mode": sel.mode,
        "rate": sel.r,
        "r_sr": sel.r_sr,
        "r_rd": sel.r_rd,
        "converged": sel.converged,
        "iterations": sel.iterations,
        "fd_rate": fd.rate.r,
        "hd_rate": hd.rate.r,
        "t_prime": fd.t_prime,
        "t_r": ch.t_bounds.tr,
        "bottleneck": fd.bottleneck,
    });
    emit(args.common.out.as_deref(), &pretty(&doc))
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let c = &args.common;
    let path = c.config.as_ref().ok_or_else(|| Failure::Usage("sweep needs --config with a sweep spec".into()))?;
    let mut doc = read_json(path)?;
    let base = doc
        .get_mut("base")
        .ok_or_else(|| Failure::Usage(format!("{}: sweep spec has no `base` scenario", path.display())))?;
    for o in &c.overrides {
        apply_override(base, o)?;
    }
    let mut spec: SweepSpec =
        serde_json::from_value(doc).map_err(|e| Failure::Usage(format!("invalid sweep spec: {e}")))?;
    if let Some(seed) = c.seed {
        spec.base.seed = seed;
    }
    if let Some(t) = c.trials {
        spec.trials = t;
    }
    if c.out.is_some() {
        spec.output = c.out.clone();
    }
    if args.json.is_some() {
        spec.json_output = args.json.clone();
    }
    if let Some(scale) = c.tr_scale {
        spec.t_r_scale = scale;
    }
    spec.validate()?;
    let rows = sim::run_sweep(&spec)?;
    if spec.output.is_none() {
        print!("{}", sim::rows_to_csv(&rows));
    }
    Ok(())
}

fn cmd_threshold(args: &ThresholdArgs) -> Result<(), Failure> {
    let cfg = load_scenario(&args.common)?;
    let trials = args.common.trials.unwrap_or(100);
    let t = sim::threshold_trials(&cfg, trials, &args.grid, args.common.tr_scale.unwrap_or_default(), &SolveOptions::default())?;
    let finite: Vec<f64> = t.iter().copied().filter(|x| x.is_finite()).collect();
    let mean = if finite.is_empty() { Value::Null } else { json!(finite.iter().sum::<f64>() / finite.len() as f64) };
    let per_trial: Vec<Value> = t.iter().map(|x| if x.is_finite() { json!(x) } else { Value::Null }).collect();
    let doc = json!({
        "grid": args.grid,
        "t_r_scale": args.common.tr_scale.unwrap_or_default(),
        "thresholds": per_trial,
        "fd_always_better": t.len() - finite.len(),
        "mean_threshold": mean,
    });
    emit(args.common.out.as_deref(), &pretty(&doc))
}

fn cmd_convergence(args: &ScenarioArgs) -> Result<(), Failure> {
    let cfg = load_scenario(&args.common)?;
    let trials = args.common.trials.unwrap_or(1000);
    let h = sim::convergence_histogram(&cfg, trials, args.common.tr_scale.unwrap_or_default(), &SolveOptions::default())?;
    let doc = json!({
        "trials": h.trials,
        "max_iter": h.max_iter,
        "counts": h.counts,
        "diverged": h.diverged,
        "cdf": h.cdf(),
        "converged_fraction": h.converged_fraction(),
    });
    emit(args.common.out.as_deref(), &pretty(&doc))
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    suites::check_suite_name(&args.suite)?;
    let defaults = SuiteOptions::default();
    let opts = SuiteOptions {
        seed: args.seed.unwrap_or(defaults.seed),
        samples: args.samples.unwrap_or(defaults.samples),
        trials: args.trials.unwrap_or(defaults.trials),
    };
    if opts.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    let reports = suites::run_suite(&args.suite, &opts)?;
    let mut all_passed = true;
    for r in &reports {
        for c in &r.checks {
            eprintln!("{} {}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, r.suite, c.name, c.detail);
        }
        all_passed &= r.passed();
    }
    let doc = json!({ "passed": all_passed, "seed": opts.seed, "reports": reports });
    emit(args.out.as_deref(), &pretty(&doc))?;
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Property)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Convergence(a) => cmd_convergence(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_sets_nested_keys() {
        let mut doc = json!({"t_bounds": {"r": 0.5}, "m": 3});
        apply_override(&mut doc, "t_bounds.r=0").unwrap();
        apply_override(&mut doc, "irs_mode=none").unwrap();
        assert_eq!(doc["t_bounds"]["r"], json!(0));
        assert_eq!(doc["irs_mode"], json!("none"));
        assert!(apply_override(&mut doc, "m.x=1").is_err());
        assert!(apply_override(&mut doc, "novalue").is_err());
    }

    #[test]
    fn scale_parser() {
        assert_eq!(parse_scale("absolute").unwrap(), TrScale::Absolute);
        assert!(parse_scale("percent").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
