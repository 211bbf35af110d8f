use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reynolds_fem::config::load_run_config;
use reynolds_fem::driver::{adaptive_solve, sweep, RunConfig, RunReport, SweepParameter};
use reynolds_fem::solver::Method;
use reynolds_fem::verify::run_verification;
use reynolds_fem::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "reynolds-fem", version, about = "Adaptive finite elements for Reynolds cavitation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive run described by a config file.
    Solve {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Independent adaptive runs over a list of alpha or penalty values.
    Sweep {
        #[arg(long, value_enum)]
        param: Param,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Base config; the benchmark when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Manufactured-solution rates and invariant checks.
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Alpha,
    PenaltyEps,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Nitsche,
    Penalty,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=2))]
    degree: Option<u64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    penalty_eps: Option<f64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(m) = self.method {
            cfg.solver.method = match m {
                MethodArg::Nitsche => Method::Nitsche,
                MethodArg::Penalty => Method::Penalty,
            };
        }
        if let Some(d) = self.degree {
            cfg.degree = d as usize;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(a) = self.alpha {
            cfg.solver.alpha = a;
        }
        if let Some(e) = self.penalty_eps {
            cfg.solver.penalty_eps = e;
        }
        if let Some(r) = self.rounds {
            cfg.rounds = r;
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = Some(o.clone());
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_CONFIG,
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::Aborted { source, .. } => exit_code(source),
        _ => EXIT_FAILURE,
    }
}

fn print_report(report: &RunReport) {
    println!("method {} degree {}", report.method, report.degree);
    println!("{:>5} {:>8} {:>12} {:>10} {:>11} {:>5}", "round", "ndofs", "eta", "max p", "min p", "iter");
    for r in &report.rounds {
        println!(
            "{:>5} {:>8} {:>12.5e} {:>10.4} {:>11.3e} {:>5}",
            r.round, r.ndofs, r.eta_total, r.p_max, r.p_min, r.iterations
        );
    }
    println!("cavitated fraction {:.4}", report.cavitated_fraction);
}

fn load(config: Option<&PathBuf>, overrides: &Overrides) -> Result<RunConfig, Error> {
    let mut cfg = match config {
        Some(p) => load_run_config(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Solve { config, overrides } => {
            let cfg = load(Some(&config), &overrides)?;
            print_report(&adaptive_solve(&cfg)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { param, values, config, overrides } => {
            let cfg = load(config.as_ref(), &overrides)?;
            let parameter = match param {
                Param::Alpha => SweepParameter::Alpha,
                Param::PenaltyEps => SweepParameter::PenaltyEps,
            };
            let mut worst = 0;
            for (v, result) in sweep(&cfg, parameter, &values) {
                match result {
                    Ok(report) => {
                        let last = report.last().expect("at least one round");
                        println!("value {v:e}: ndofs {} eta {:.5e} max p {:.4}", last.ndofs, last.eta_total, last.p_max);
                    }
                    Err(e) => {
                        println!("value {v:e}: {e}");
                        worst = worst.max(exit_code(&e));
                    }
                }
            }
            Ok(ExitCode::from(worst))
        }
        Command::Verify => {
            let checks = run_verification()?;
            let mut ok = true;
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE) })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
