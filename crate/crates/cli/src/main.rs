#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gis_cli::config::{parse_config, parse_matrix, ScenarioConfig};
use gis_cli::demo::{run_demo_example1, DemoVariant};
use gis_cli::run::{certify, simulate, write_outputs, SCOPE_NOTE};
use gis_cli::{CliError, Result};
use gis_core::certify::DEFAULT_SEED;
use gis_core::lognorm::{default_theta_sequence, log_norm, log_norm_limit_estimate};
use gis_core::{Matrix, NormKind};

/// Logarithmic norms and numerical incremental-stability certificates.
///
/// Exit codes: 0 success, 1 a check did not pass, 2 usage or configuration
/// error, 3 numerical or I/O failure.
#[derive(Parser)]
#[command(name = "gis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logarithmic norms of a matrix, closed form and limit estimate.
    Lognorm {
        /// Inline matrix ("1 2; 3 4") or a file with one row per line.
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
        /// l1, l2, linf or weighted:<file>; repeatable. Defaults to l1, l2 and linf.
        #[arg(long = "norm")]
        norms: Vec<String>,
    },
    /// Certify contraction of the system in a scenario file.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides [norm]: l1, l2, linf or weighted:<file>.
        #[arg(long)]
        norm: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides [output] dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the scenario and check convergence.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in demonstration.
    Demo {
        #[command(subcommand)]
        which: DemoCommand,
    },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// The planar example with a time-varying gain.
    Example1 {
        #[arg(long, value_enum, default_value = "fig1")]
        variant: VariantArg,
        #[arg(long, default_value = "out/example1")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Fig1,
    Fig2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// `Ok(false)` when the command ran but a check failed.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Lognorm { matrix, norms } => lognorm(&matrix, &norms),
        Command::Certify { config, norm, seed, out } => {
            let mut cfg = load(&config)?;
            if let Some(n) = norm {
                cfg.norm = parse_norm(&n)?;
            }
            if let Some(s) = seed {
                cfg.sampling.seed = s;
            }
            let sys = cfg.build_system();
            let outcome = certify(&cfg, &sys)?;
            let c = &outcome.certificate;
            println!("norm: {}", cfg.norm.label());
            println!("sup mu over samples: {} at x = {:?}, t = {}", c.mu_sup, c.argmax.0, c.argmax.1);
            match c.alpha0_estimate {
                Some(a) => println!("certified on domain with alpha0 = {a}"),
                None => println!("not certified: sup mu is not negative"),
            }
            println!("note: {SCOPE_NOTE}");
            let dir = out.unwrap_or(cfg.output.dir.clone());
            write_outputs(&dir, &cfg, None, &outcome.report)?;
            println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
            Ok(outcome.passed)
        }
        Command::Simulate { config, tf, out } => {
            let cfg = load(&config)?;
            let tf = tf.unwrap_or(cfg.tf);
            if !(tf > cfg.t0) {
                return Err(CliError::Usage(format!("--tf {tf} must exceed t0 = {}", cfg.t0)));
            }
            let sys = cfg.build_system();
            let outcome = simulate(&cfg, &sys, tf)?;
            let (t, x) = outcome.trajectory.last().expect("nonempty trajectory");
            println!("x({t}) = {:?}", x.as_slice());
            println!("convergence to origin: {}", outcome.origin.verdict.label());
            let dir = out.unwrap_or(cfg.output.dir.clone());
            write_outputs(&dir, &cfg, Some(&outcome.trajectory), &outcome.report)?;
            Ok(true)
        }
        Command::Demo { which: DemoCommand::Example1 { variant, out, seed } } => {
            let variant = match variant {
                VariantArg::Fig1 => DemoVariant::Fig1,
                VariantArg::Fig2 => DemoVariant::Fig2,
            };
            let outcome = run_demo_example1(variant, &out, seed)?;
            print!("{}", outcome.report.to_csv());
            println!("note: {SCOPE_NOTE}");
            println!("outputs written to {}", out.display());
            println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
            Ok(outcome.passed)
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}

/// A matrix given inline or as a path to a file.
fn read_matrix(arg: &str) -> Result<Matrix> {
    let path = Path::new(arg);
    let text =
        if path.is_file() { fs::read_to_string(path).map_err(|e| CliError::io(path, e))? } else { arg.to_string() };
    parse_matrix(&text).map_err(|m| CliError::Usage(format!("matrix '{arg}': {m}")))
}

fn parse_norm(s: &str) -> Result<NormKind> {
    match s {
        "l1" => Ok(NormKind::L1),
        "l2" => Ok(NormKind::L2),
        "linf" => Ok(NormKind::LInf),
        _ => match s.strip_prefix("weighted:") {
            Some(file) => NormKind::weighted(read_matrix(file)?).map_err(|e| CliError::Usage(e.to_string())),
            None => Err(CliError::Usage(format!("unknown norm '{s}' (expected l1, l2, linf or weighted:<file>)"))),
        },
    }
}

fn lognorm(matrix: &str, norms: &[String]) -> Result<bool> {
    let a = read_matrix(matrix)?;
    let kinds = if norms.is_empty() {
        vec![NormKind::L1, NormKind::L2, NormKind::LInf]
    } else {
        norms.iter().map(|n| parse_norm(n)).collect::<Result<_>>()?
    };
    let thetas = default_theta_sequence();
    for kind in &kinds {
        let closed = log_norm(&a, kind).map_err(usage_if_shape)?;
        let limit = log_norm_limit_estimate(&a, kind, &thetas)?;
        println!("{:<9} closed form {closed:>24}   limit estimate {:>24}", kind.label(), limit.value);
    }
    Ok(true)
}

/// Shape problems in user-supplied matrices are input errors, not numerical ones.
fn usage_if_shape(e: gis_core::Error) -> CliError {
    match e {
        gis_core::Error::NotSquare { .. } | gis_core::Error::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
        other => CliError::Numerics(other),
    }
}
