use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand};
use coderiv::experiments::{run_experiment, trace_csv, ExperimentConfig, ExperimentReport, EXPERIMENTS};
use coderiv::Error;

/// Run the coderivative experiments and write JSON reports.
#[derive(Parser)]
#[command(name = "coderiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List experiment ids.
    List,
    /// Run one experiment. Exit status 0 on pass, 1 on fail, 2 on bad input.
    Run(RunArgs),
    /// Print the representative oracle trace of an experiment as CSV.
    Trace(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    experiment: Option<String>,
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Zero-based indices, comma separated.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    r0: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    dirs: Option<String>,
    #[arg(long)]
    instances: Option<String>,
    #[arg(long)]
    candidates: Option<String>,
    /// `parallel` or `sequential`.
    #[arg(long)]
    execution: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, String> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            cfg.apply_kv(&text).map_err(|e| e.to_string())?;
        }
        let flags = [
            ("experiment", self.experiment.clone()),
            ("seed", self.seed.map(|s| s.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("p", self.p.clone()),
            ("dim", self.dim.clone()),
            ("grid", self.grid.clone()),
            ("r", self.r.clone()),
            ("n", self.n.clone()),
            ("m", self.m.clone()),
            ("r0", self.r0.clone()),
            ("levels", self.levels.clone()),
            ("dirs", self.dirs.clone()),
            ("instances", self.instances.clone()),
            ("candidates", self.candidates.clone()),
            ("execution", self.execution.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(|e| e.to_string())?;
            }
        }
        if cfg.experiment.is_empty() {
            return Err("no experiment given (use --experiment or an `experiment` key)".into());
        }
        Ok(cfg)
    }
}

fn execute(args: &RunArgs) -> Result<ExperimentReport, (u8, String)> {
    let cfg = args.config().map_err(|e| (2, e))?;
    run_experiment(&cfg).map_err(|e| match e {
        Error::Config(_) | Error::UnknownExperiment(_) => (2, e.to_string()),
        other => (3, other.to_string()),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::List => {
            for (id, what) in EXPERIMENTS {
                println!("{id:<30} {what}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Trace(args) => execute(args).map(|report| {
            print!("{}", trace_csv(&report));
            0
        }),
        Command::Run(args) => execute(args).and_then(|report| {
            let stamp = humantime::format_rfc3339_seconds(SystemTime::now()).to_string();
            let json = report.to_json(&stamp);
            match &report.config.out {
                Some(path) => {
                    std::fs::write(path, json + "\n").map_err(|e| (3, format!("{}: {e}", path.display())))?;
                    print!("{report}");
                }
                None => {
                    eprint!("{report}");
                    println!("{json}");
                }
            }
            Ok(if report.passed { 0 } else { 1 })
        }),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
