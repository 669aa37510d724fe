//! Command-line front end: configuration, batch evaluation and report writing.

pub mod battery;
pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use commands::{exit, Failure, Options, Output};
use config::{Format, JobConfig};

#[derive(Debug, Parser)]
#[command(name = "spacelike", version, about = "Geometry of space-like graphs in pseudo-Euclidean space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Job configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Emit oracle comparison columns.
    #[arg(long, global = true)]
    pub oracle: bool,
    /// Worker threads for batch evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Per-node geometry of a graph map.
    Analyze,
    /// Per-node geometry of the gradient graph of a potential.
    Lagrangian,
    /// Solve the maximal-surface Dirichlet problem.
    SolveMaximal,
    /// Solve the Monge-Ampère Dirichlet problem.
    SolveMa,
    /// Tabulate S at the center of growing balls.
    Scan,
    /// Run the built-in invariant suites.
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Lagrangian => "lagrangian",
            Command::SolveMaximal => "solve-maximal",
            Command::SolveMa => "solve-ma",
            Command::Scan => "scan",
            Command::Check => "check",
        }
    }
}

fn load_config(cli: &Cli) -> Result<JobConfig, String> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            JobConfig::from_toml(&text).map_err(|e| e.to_string())
        }
        None if cli.command == Command::Check => Ok(JobConfig::default()),
        None => Err("--config: required for this command".into()),
    }
}

fn dispatch(cli: &Cli, cfg: &JobConfig) -> Result<Output, Failure> {
    let opts = Options {
        oracle: cli.oracle,
        seed: cli.seed,
    };
    match cli.command {
        Command::Analyze => commands::analyze(cfg, &opts),
        Command::Lagrangian => commands::lagrangian(cfg, &opts),
        Command::SolveMaximal => commands::solve_maximal_cmd(cfg),
        Command::SolveMa => commands::solve_ma_cmd(cfg),
        Command::Scan => commands::scan(cfg, cli.threads != Some(1)),
        Command::Check => Ok(commands::check(&opts)),
    }
}

fn log_path(out: &std::path::Path, format: Format) -> PathBuf {
    let ext = match format {
        Format::Csv => "log.csv",
        Format::Json => "log.json",
    };
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return exit::CONFIG;
        }
    };
    let format = cli.format.or(cfg.output.format).unwrap_or(Format::Csv);
    let out_path = cli.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    if cli.threads == Some(0) {
        eprintln!("config error: --threads: must be at least 1");
        return exit::CONFIG;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: --threads: {e}");
            return exit::CONFIG;
        }
    };
    let result = pool.install(|| dispatch(&cli, &cfg));
    let output = match result {
        Ok(o) => o,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            return exit::CONFIG;
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            return exit::NUMERICAL;
        }
    };
    let mut meta = Map::new();
    meta.insert("command".into(), json!(cli.command.name()));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("config".into(), serde_json::to_value(&cfg).unwrap_or(Value::Null));
    meta.insert("warnings".into(), json!(output.warnings));
    for (k, v) in &output.meta {
        meta.insert(k.clone(), v.clone());
    }
    let text = output.table.render(format, &meta);
    let log_text = output.log.as_ref().map(|l| l.render(format, &Map::new()));
    match &out_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("config error: --out {}: {e}", path.display());
                return exit::CONFIG;
            }
            if let Some(lt) = log_text {
                let lp = log_path(path, format);
                if let Err(e) = std::fs::write(&lp, lt) {
                    eprintln!("config error: {}: {e}", lp.display());
                    return exit::CONFIG;
                }
            }
        }
        None => {
            print!("{text}");
            if let Some(lt) = log_text {
                eprint!("{lt}");
            }
        }
    }
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    output.exit
}
