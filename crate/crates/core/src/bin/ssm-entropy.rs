use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use ssm_entropy::cli::{self, Format, RunOptions, Units};
use ssm_entropy::ssm::P_C_ESTIMATE;

#[derive(Parser)]
#[command(name = "ssm-entropy", version, about = "Certified entropy and pressure brackets on Z^2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bracket the entropy rate of the Gibbs measure.
    Entropy(RunArgs),
    /// Bracket the pressure of the interaction.
    Pressure(RunArgs),
    /// Disagreement-percolation certificate for strong spatial mixing.
    SsmCheck {
        model: PathBuf,
        #[arg(long, default_value_t = P_C_ESTIMATE)]
        pc: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Bounds on the marginal probability of a pattern.
    Marginal {
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Pinned site as `x,y=symbol`; repeat for more sites.
        #[arg(long = "site", required = true, allow_hyphen_values = true)]
        sites: Vec<String>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Args)]
struct RunArgs {
    model: PathBuf,
    #[arg(long)]
    n: usize,
    /// Fixed m; skips the adaptive loop.
    #[arg(long)]
    m: Option<usize>,
    /// Target gap (default e^-n).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 8)]
    max_j: usize,
    #[arg(long, default_value_t = 600.0)]
    max_seconds: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Units::Nats)]
    units: Units,
    #[arg(long, value_parser = ["on", "off"], default_value = "on")]
    exact_conditionals: String,
    #[arg(long, default_value_t = P_C_ESTIMATE)]
    pc: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            n: self.n,
            m: self.m,
            tol: self.tol,
            max_j: self.max_j,
            max_seconds: self.max_seconds,
            threads: self.threads,
            units: self.units,
            exact_conditionals: self.exact_conditionals == "on",
            pc: self.pc,
        }
    }
}

fn print<T: Serialize>(value: &T, format: Format, text: impl FnOnce() -> String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("serializable")),
        Format::Text => print!("{}", text()),
    }
}

fn flat_text<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut out = String::new();
    if let serde_json::Value::Object(map) = v {
        for (k, v) in map {
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{k}: {v}\n"));
        }
    }
    out
}

fn run(cli: Cli) -> Result<ExitCode, ssm_entropy::error::Error> {
    match cli.command {
        Command::Entropy(args) => {
            let r = cli::cmd_entropy(&args.model, &args.options())?;
            print(&r, args.format, || r.to_text());
            Ok(if r.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Pressure(args) => {
            let r = cli::cmd_pressure(&args.model, &args.options())?;
            print(&r, args.format, || r.to_text());
            Ok(if r.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::SsmCheck { model, pc, format } => {
            let r = cli::cmd_ssm_check(&model, pc)?;
            print(&r, format, || flat_text(&r));
            Ok(ExitCode::SUCCESS)
        }
        Command::Marginal {
            model,
            n,
            m,
            sites,
            threads,
            format,
        } => {
            let r = cli::cmd_marginal(&model, n, m, &sites, threads)?;
            print(&r, format, || flat_text(&r));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(parsed) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
