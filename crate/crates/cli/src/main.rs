use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heatlab_cli::sweep::{parse_exponents, parse_range};
use heatlab_cli::{convert_report, run_file, sweep_to, Format, Outcome, Result, SweepCheck, SweepSpec, USAGE_EXIT};

#[derive(Parser)]
#[command(name = "heatlab", version, about = "Wasserstein contraction and rigidity checks on weighted model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a scenario file and print the JSON report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One CSV row per (k, a, t, x, y, p) tuple. Ranges are `v1,v2,...` or `lo:hi:n`.
    Sweep {
        /// contraction, gradient, log-sobolev, log-harnack, gaussian-lower-bound or entropy-geodesic
        check: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        k: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        a: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0.5")]
        t: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        x: String,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        y: String,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 2049)]
        nodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit a saved report.
    Report {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Run { scenario, out } => run_file(&scenario, out.as_deref()),
        Command::Sweep { check, k, a, t, x, y, p, tol, nodes, out } => {
            let spec = SweepSpec {
                check: check.parse::<SweepCheck>()?,
                k: parse_range("k", &k)?,
                a: parse_range("a", &a)?,
                t: parse_range("t", &t)?,
                x: parse_range("x", &x)?,
                y: parse_range("y", &y)?,
                p: parse_exponents(&p)?,
                tol,
                nodes,
            };
            sweep_to(&spec, out.as_deref())
        }
        Command::Report { file, format, out } => convert_report(&file, format, out.as_deref()).map(|_| Outcome::Pass),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_EXIT } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE_EXIT)
        }
    }
}
