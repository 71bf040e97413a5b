use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mirrorlearn::harness::{
    block_experiment, complexity_report, counterexample_experiment, emit, experts_experiment, oracle_complexity_curve,
    rerm_excess_risk_experiment, run_regret_experiment, stability_experiment, write_atomic, ExperimentConfig,
    ExperimentReport, Format, OracleAlgorithm, VERSION,
};
use mirrorlearn::Error;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "mirrorlearn", version, about = "Run mirror descent, experts and lower-bound experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Online mirror descent against an adversarial loss stream.
    Regret(Common),
    /// ERM versus SGD on the hidden-coordinate problem.
    Counterexample(Common),
    /// Resisting-oracle and benign suboptimality curves.
    OracleLb(Common),
    /// Exact complexity measures of a finite class.
    Complexity(Common),
    /// Agnostic Fat-SOA experts and the block-sign game.
    Experts(Common),
    /// Average-RO stability and regularized ERM excess risk.
    Stability(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat JSON config; keys not given keep the subcommand defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file. `.json` writes the full report, anything else CSV rows.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Worker threads; falls back to the THREADS environment variable.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Config override, repeatable. Values are JSON (strings may be bare).
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_kv)]
    set: Vec<(String, String)>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    if k.is_empty() {
        return Err("empty key".into());
    }
    Ok((k.to_string(), v.to_string()))
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn preset(cmd: &Command) -> ExperimentConfig {
    let base = ExperimentConfig::default();
    match cmd {
        Command::Regret(_) => base,
        Command::Counterexample(_) => ExperimentConfig { d: 256, n_grid: vec![8], trials: 200, ..base },
        Command::OracleLb(_) => base,
        Command::Complexity(_) => ExperimentConfig { d: 3, ..base },
        Command::Experts(_) => ExperimentConfig {
            d: 2,
            alpha: 2.0,
            n_grid: vec![8, 16],
            max_scale: 2,
            noise: 0.1,
            trials: 4,
            ..base
        },
        Command::Stability(_) => ExperimentConfig { d: 5, n_grid: vec![32, 64, 128], trials: 30, ..base },
    }
}

fn resolve(cmd: &Command, args: &Common) -> Result<ExperimentConfig, Failure> {
    let usage = |e: Error| Failure::Usage(e.to_string());
    let mut overrides: Vec<(String, String)> = vec![];
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Failure::Usage(format!("{}: config must be a JSON object", path.display())))?;
        overrides.extend(obj.iter().map(|(k, v)| (k.clone(), v.to_string())));
    }
    overrides.extend(args.set.iter().cloned());
    let threads = match args.threads {
        Some(t) => Some(t),
        None => match std::env::var("THREADS") {
            Ok(s) => Some(s.parse().map_err(|_| Failure::Usage(format!("THREADS must be an integer, got `{s}`")))?),
            Err(_) => None,
        },
    };
    for (key, val) in [("seed", args.seed.map(|v| v.to_string())), ("trials", args.trials.map(|v| v.to_string())), ("threads", threads.map(|v| v.to_string()))] {
        if let Some(v) = val {
            overrides.push((key.to_string(), v));
        }
    }
    preset(cmd).with_overrides(&overrides).map_err(usage)
}

fn merge(name: &str, cfg: &ExperimentConfig, parts: Vec<ExperimentReport>) -> ExperimentReport {
    let mut out = ExperimentReport::new(name, cfg);
    let mut summary = serde_json::Map::new();
    for p in parts {
        out.rows.extend(p.rows);
        out.bounds.extend(p.bounds);
        summary.insert(p.experiment, p.summary);
    }
    out.summary = Value::Object(summary);
    out.finish()
}

fn write_report(report: &ExperimentReport, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let format = if path.extension().is_some_and(|e| e == "json") { Format::Json } else { Format::Csv };
            emit(report, &report.rows, format, path)?;
            // Rows went to the file; echo the resolved config and summary for provenance.
            let echo = json!({ "version": VERSION, "experiment": report.experiment, "config": report.config, "summary": report.summary, "rows": report.rows.len(), "out": path });
            println!("{}", serde_json::to_string_pretty(&echo).map_err(Error::from)?);
        }
        None => println!("{}", serde_json::to_string_pretty(report).map_err(Error::from)?),
    }
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<(), Failure> {
    let args = match cmd {
        Command::Regret(a)
        | Command::Counterexample(a)
        | Command::OracleLb(a)
        | Command::Complexity(a)
        | Command::Experts(a)
        | Command::Stability(a) => a,
    };
    let cfg = resolve(cmd, args)?;
    let report = match cmd {
        Command::Regret(_) => run_regret_experiment(&cfg)?,
        Command::Counterexample(_) => counterexample_experiment(&cfg)?,
        Command::OracleLb(_) => merge(
            "oracle_lb",
            &cfg,
            vec![
                oracle_complexity_curve(&cfg, OracleAlgorithm::MirrorDescent)?,
                oracle_complexity_curve(&cfg, OracleAlgorithm::GradientDescent)?,
            ],
        ),
        Command::Experts(_) => merge("experts", &cfg, vec![experts_experiment(&cfg)?, block_experiment(&cfg)?]),
        Command::Stability(_) => merge("stability", &cfg, vec![stability_experiment(&cfg)?, rerm_excess_risk_experiment(&cfg)?]),
        Command::Complexity(_) => {
            let rep = complexity_report(&cfg)?;
            let doc = json!({ "version": VERSION, "experiment": "complexity", "config": cfg, "report": rep });
            let text = serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n";
            match &args.out {
                Some(p) => write_atomic(p, text.as_bytes())?,
                None => print!("{text}"),
            }
            return Ok(());
        }
    };
    write_report(&report, args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e @ Error::Capacity { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
