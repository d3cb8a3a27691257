use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pathhedge::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use pathhedge::superhedge::PriceRequest;

#[derive(Parser)]
#[command(name = "pathhedge", version, about = "Pathwise hedging experiments on scenario corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pathwise integrals along the partition ladder.
    Integrate(RunArgs),
    /// p-th order variation estimates.
    Variation(RunArgs),
    /// Search scenarios for an arbitrage falsifier.
    ArbitrageProbe(RunArgs),
    /// Replicate a vertically affine payoff.
    PerfectHedge(RunArgs),
    /// Backtest the Asian superhedge.
    SuperhedgeBacktest(RunArgs),
    /// Check the verification condition along adversarial paths.
    Verify(RunArgs),
    /// Compare the lattice oracle with the closed form.
    OracleCompare(RunArgs),
    /// Print the Asian superhedging price, delta and theta as JSON.
    Price(PriceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Ladder levels as `first..last`.
    #[arg(long, value_parser = parse_levels)]
    levels: Option<(usize, usize)>,
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long = "A0", default_value_t = 0.0)]
    a0: f64,
    #[arg(long)]
    x0: f64,
    #[arg(long = "T")]
    maturity: f64,
    #[arg(long = "K")]
    strike: f64,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
}

fn parse_levels(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected first..last")?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err(format!("empty level range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut v: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            if let Some(k) = v.get("kind") {
                let declared: ExperimentKind = serde_json::from_value(k.clone())?;
                if declared != kind {
                    bail!("config kind {} does not match subcommand {}", declared.name(), kind.name());
                }
            }
            v["kind"] = serde_json::to_value(kind)?;
            serde_json::from_value(v).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => ExperimentConfig::for_kind(kind),
    };
    if let Some(s) = args.seed {
        cfg.scenario.seed = s;
    }
    if let Some((lo, hi)) = args.levels {
        cfg.ladder.first_level = lo;
        cfg.ladder.last_level = hi;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let (kind, args) = match cli.command {
        Command::Price(p) => {
            let req = PriceRequest {
                t0: p.t0,
                a0: p.a0,
                x0: p.x0,
                maturity: p.maturity,
                strike: p.strike,
                a: p.a,
                b: p.b,
            };
            let quote = req.quote()?;
            println!("{}", serde_json::to_string_pretty(&quote)?);
            return Ok(true);
        }
        Command::Integrate(a) => (ExperimentKind::Integrate, a),
        Command::Variation(a) => (ExperimentKind::Variation, a),
        Command::ArbitrageProbe(a) => (ExperimentKind::ArbitrageProbe, a),
        Command::PerfectHedge(a) => (ExperimentKind::PerfectHedge, a),
        Command::SuperhedgeBacktest(a) => (ExperimentKind::SuperhedgeBacktest, a),
        Command::Verify(a) => (ExperimentKind::Verify, a),
        Command::OracleCompare(a) => (ExperimentKind::OracleCompare, a),
    };
    let cfg = load(kind, &args)?;
    let report = run_experiment(&cfg, &args.out)?;
    for c in &report.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{mark} {} value={} tol={}", c.name, c.value, c.tol);
    }
    for f in &report.failures {
        eprintln!("error: {f}");
    }
    println!("{}", report.files.join("\n"));
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
