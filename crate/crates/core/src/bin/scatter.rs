//! `scatter`: k-sweeps, consistency checks and closed-form references from
//! the command line.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use varphase::oracles::OracleSpec;
use varphase::spectra::{self, Engine, KSpec, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "scatter", version, about = "Variable phase S-matrix solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep k and write eigenphase, S-matrix and diagnostics tables.
    Run(RunArgs),
    /// Run the consistency checks and print a JSON report.
    Check(CheckArgs),
    /// Print closed-form S values as CSV.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct KArgs {
    /// A single real wave number.
    #[arg(long, conflicts_with_all = ["kmin", "kmax", "knum"])]
    k: Option<f64>,
    #[arg(long, requires_all = ["kmax", "knum"])]
    kmin: Option<f64>,
    #[arg(long)]
    kmax: Option<f64>,
    #[arg(long)]
    knum: Option<usize>,
    /// Read the grid as κ values on the imaginary axis, k = iκ.
    #[arg(long)]
    k_imag: bool,
}

impl KArgs {
    fn spec(&self) -> Option<KSpec> {
        match (self.k, self.kmin, self.kmax, self.knum) {
            (Some(k), ..) if self.k_imag => Some(KSpec::Value(Complex64::new(0.0, k))),
            (Some(k), ..) => Some(KSpec::Value(Complex64::new(k, 0.0))),
            (None, Some(min), Some(max), Some(num)) if self.k_imag => {
                Some(KSpec::Imag { min, max, num })
            }
            (None, Some(min), Some(max), Some(num)) => Some(KSpec::Grid { min, max, num }),
            _ => None,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    #[command(flatten)]
    k: KArgs,
    /// ℓmax or jmax.
    #[arg(long, alias = "lmax")]
    jmax: Option<u32>,
    #[arg(long)]
    r0: Option<f64>,
    /// Add engine-vs-closed-form columns.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum OracleKind {
    SquareWell,
    DielectricSphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pol {
    M,
    N,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum)]
    kind: OracleKind,
    /// Well depth (square well).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    v0: f64,
    /// Refractive index (dielectric sphere).
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Partial wave ℓ (square well) or j (sphere).
    #[arg(long, alias = "j", default_value_t = 1)]
    l: u32,
    #[arg(long, value_enum, default_value = "m")]
    pol: Pol,
    #[command(flatten)]
    k: KArgs,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: varphase::error::Error| e.to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> varphase::error::Result<ExitCode> {
    match cli.command {
        Command::Run(a) => {
            let overrides = Overrides {
                engine: a.engine,
                k: a.k.spec(),
                max: a.jmax,
                r0: a.r0,
                oracle: a.oracle,
                out: a.out.clone(),
            };
            let cfg = RunConfig::from_file(&a.config)?.apply(&overrides)?;
            let progress = AtomicUsize::new(0);
            let out = spectra::run_sweep_with_progress(&cfg, &progress)?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for path in spectra::write_outputs(&out, &dir)? {
                println!("wrote {}", path.display());
            }
            if let Some(dev) = out.max_oracle_deviation() {
                println!("max |Δδ| vs closed form: {dev:.3e}");
            }
            let failed = out.failures();
            eprintln!(
                "solved {}/{} k points",
                progress.load(Ordering::Relaxed) - failed,
                out.ks.len()
            );
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Check(a) => {
            let cfg = RunConfig::from_file(&a.config)?;
            let report = spectra::run_checks(&cfg)?;
            let text = serde_json::to_string_pretty(&report)?;
            if let Some(path) = a.out {
                std::fs::write(path, &text)?;
            }
            println!("{text}");
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Oracle(a) => {
            let spec = match a.kind {
                OracleKind::SquareWell => OracleSpec::SquareWell { v0: a.v0, a: a.a },
                OracleKind::DielectricSphere => OracleSpec::DielectricSphere { n: a.n, a: a.a },
            };
            let ks = a.k.spec().unwrap_or_default();
            ks.validate()?;
            let pol = match a.pol {
                Pol::M => 1,
                Pol::N => -1,
            };
            let rows = spectra::oracle_table(spec, a.l, pol, &ks.values())?;
            print!("{}", spectra::oracle_csv(&rows));
            Ok(ExitCode::SUCCESS)
        }
    }
}
