//! Thin command-line front end over [`qparrep::experiments`].
//!
//! Exit codes: 0 when every bound check passes, 1 on a bound failure,
//! 2 on configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qparrep::experiments::{run, ExperimentConfig, ExperimentKind, OutputFormat};

#[derive(Parser)]
#[command(name = "qparrep", version, about = "Seeded experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (mandatory for experiments involving sampling).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Protocol JSON consumed by repeat-sweep.
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Report destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Product-adversary acceptance across fold counts.
    RepeatSweep(Common),
    /// Non-uniform extraction from planted k-fold adversaries.
    Extract(Common),
    /// The uniform extraction pipeline on planted adversaries.
    ExtractUniform(Common),
    /// Round-halving completeness checks.
    Compress(Common),
    /// Public-coin compilation checks.
    PublicCoin(Common),
    /// Forwarding adversary against the k-fold XOR-guessing game.
    Counterexample(Common),
    /// XOR repetition and flavor-switch bounds on random commitments.
    Xor(Common),
    /// Foundation invariant suite.
    Selftest(Common),
}

fn build_config(kind: ExperimentKind, common: &Common) -> Result<ExperimentConfig, String> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            let cfg: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| format!("bad config: {e}"))?;
            cfg
        }
        None => ExperimentConfig {
            experiment: kind,
            seed: 0,
            dim: None,
            k: None,
            delta: None,
            mu: None,
            epsilon: None,
            trials: None,
            protocol_file: None,
            out: None,
            format: OutputFormat::Json,
        },
    };
    config.experiment = kind;
    if let Some(s) = common.seed {
        config.seed = s;
    } else if common.config.is_none() && kind.needs_seed() {
        return Err("--seed is mandatory for sampling experiments".into());
    }
    if let Some(v) = common.dim {
        config.dim = Some(v);
    }
    if let Some(v) = common.k {
        config.k = Some(v);
    }
    if let Some(v) = common.delta {
        config.delta = Some(v);
    }
    if let Some(v) = common.mu {
        config.mu = Some(v);
    }
    if let Some(v) = common.epsilon {
        config.epsilon = Some(v);
    }
    if let Some(v) = common.trials {
        config.trials = Some(v);
    }
    if let Some(v) = &common.protocol {
        config.protocol_file = Some(v.clone());
    }
    if let Some(v) = &common.out {
        config.out = Some(v.clone());
    }
    if let Some(v) = &common.format {
        config.format = match v.as_str() {
            "json" => OutputFormat::Json,
            "csv" => OutputFormat::Csv,
            other => return Err(format!("unknown format {other:?} (use json or csv)")),
        };
    }
    validate(&config)?;
    Ok(config)
}

fn validate(config: &ExperimentConfig) -> Result<(), String> {
    if let Some(d) = config.delta {
        if !(0.0 < d && d <= 1.0) {
            return Err(format!("--delta {d} outside (0, 1]"));
        }
    }
    if let Some(m) = config.mu {
        if !(0.0 < m && m < 0.5) {
            return Err(format!("--mu {m} outside (0, 1/2)"));
        }
    }
    if let Some(e) = config.epsilon {
        if !(0.0 < e && e < 1.0) {
            return Err(format!("--epsilon {e} outside (0, 1)"));
        }
    }
    if config.trials == Some(0) {
        return Err("--trials must be positive".into());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::RepeatSweep(c) => (ExperimentKind::RepeatSweep, c),
        Command::Extract(c) => (ExperimentKind::ExtractNonuniform, c),
        Command::ExtractUniform(c) => (ExperimentKind::ExtractUniform, c),
        Command::Compress(c) => (ExperimentKind::CompressCheck, c),
        Command::PublicCoin(c) => (ExperimentKind::PublicCoinCheck, c),
        Command::Counterexample(c) => (ExperimentKind::Counterexample, c),
        Command::Xor(c) => (ExperimentKind::XorSweep, c),
        Command::Selftest(c) => (ExperimentKind::Selftest, c),
    };
    let config = match build_config(kind, common) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.write_out() {
        eprintln!("cannot write report: {e}");
        return ExitCode::from(2);
    }
    for check in &report.checks {
        eprintln!(
            "[{}] {}: {:.6e} {} {:.6e}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            if check.direction == "leq" { "<=" } else { ">=" },
            check.bound
        );
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
