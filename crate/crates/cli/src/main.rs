//! `mhp`: multigroup multicast precoding from the command line.
//!
//! Exit codes: 0 on success, 1 when the only outcome is infeasibility,
//! 2 on usage, configuration, parse or I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mhp_core::experiment::{self, ExperimentSpec};
use mhp_core::fd::{solve_mmf, solve_qos, DesignOptions, Targets};
use mhp_core::{
    decompose, generate_channels, io, min_sinr, performance_ratio, quantize_phases, DecomposeOptions, Error,
    FdPrecoder, PhaseFamily, Resolution, RhoMode, SystemConfig,
};

#[derive(Parser)]
#[command(name = "mhp", version, about = "Hybrid precoding for multigroup multicasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Qos,
    Mmf,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a seeded channel set and write it to a file.
    GenChannels {
        /// Number of antennas.
        #[arg(long, short = 'n')]
        antennas: usize,
        /// UEs per group, comma-separated (one entry per group).
        #[arg(long, short = 'k', value_delimiter = ',', required = true)]
        group_sizes: Vec<usize>,
        /// Paths per channel.
        #[arg(long, short = 'l', default_value_t = 4)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Antenna spacing over wavelength.
        #[arg(long, default_value_t = 0.5)]
        spacing: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_power: f64,
        #[arg(long, short = 'o')]
        output: PathBuf,
    },
    /// Design a fully-digital precoder for a channel file.
    SolveFd {
        #[arg(long, short = 'c')]
        channels: PathBuf,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        /// Linear SINR target (QoS).
        #[arg(long, required_if_eq("problem", "qos"))]
        target: Option<f64>,
        /// Total power budget in Watts (MMF).
        #[arg(long, required_if_eq("problem", "mmf"))]
        budget: Option<f64>,
        #[arg(long, default_value_t = 100)]
        n_rand: usize,
        /// Randomization seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short = 'o')]
        output: PathBuf,
    },
    /// Factor a precoder file into a hybrid precoder file.
    Decompose {
        #[arg(long, short = 'p')]
        precoder: PathBuf,
        /// `primary` or `alternate`.
        #[arg(long, default_value = "primary")]
        family: PhaseFamily,
        /// Phase-shifter resolution in bits, or `inf`.
        #[arg(long, default_value = "inf")]
        bits: Resolution,
        /// `per_group` or `uniform`.
        #[arg(long, default_value = "per_group")]
        rho_mode: RhoMode,
        #[arg(long, short = 'o')]
        output: PathBuf,
    },
    /// Print the metrics of a precoder (fully-digital or hybrid) on a channel file.
    Evaluate {
        #[arg(long, short = 'c')]
        channels: PathBuf,
        /// Fully-digital precoder file.
        #[arg(long, short = 'p', conflicts_with = "hybrid", required_unless_present = "hybrid")]
        precoder: Option<PathBuf>,
        /// Hybrid precoder file.
        #[arg(long)]
        hybrid: Option<PathBuf>,
        /// Fully-digital reference precoder; adds its min-SINR ratio.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Run a campaign spec file and write its CSV.
    Run {
        spec: PathBuf,
        /// Output CSV path; standard output when omitted.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// Aggregate a campaign CSV into per-experiment tables.
    Report {
        csv: PathBuf,
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Infeasible(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) | Error::MaxIterations(_) => Failure::Infeasible(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("stdout: {e}"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenChannels {
            antennas,
            group_sizes,
            paths,
            seed,
            spacing,
            noise_power,
            output,
        } => {
            let mut cfg = SystemConfig::new(antennas, group_sizes, paths)?;
            cfg.spacing_ratio = spacing;
            cfg.noise_power = noise_power;
            cfg.validate()?;
            io::write_channels(&generate_channels(&cfg, seed)?, &output)?;
        }
        Command::SolveFd {
            channels,
            problem,
            target,
            budget,
            n_rand,
            seed,
            output,
        } => {
            let set = io::read_channels(&channels)?;
            let sigma2 = set.config.noise_power;
            let options = DesignOptions {
                n_rand,
                seed,
                ..DesignOptions::default()
            };
            let (w, bound) = match problem {
                ProblemArg::Qos => {
                    let gamma = target.expect("enforced by clap");
                    let d = solve_qos(&set, &Targets::uniform(&set, gamma), sigma2, &options)?;
                    (d.precoder, d.sdr_bound)
                }
                ProblemArg::Mmf => {
                    let d = solve_mmf(&set, budget.expect("enforced by clap"), sigma2, &options)?;
                    (d.precoder, d.sdr_bound)
                }
            };
            io::write_precoder(&w, &output)?;
            println!("min_sinr {}", min_sinr(&set, &w, sigma2)?);
            println!("total_power_watts {}", w.power());
            println!("sdr_bound {bound}");
        }
        Command::Decompose {
            precoder,
            family,
            bits,
            rho_mode,
            output,
        } => {
            let w = io::read_precoder(&precoder)?;
            let mut h = decompose(&w, DecomposeOptions { family, rho_mode });
            if !bits.is_infinite() {
                h = quantize_phases(&h, bits);
            }
            io::write_hybrid(&h, &output)?;
            println!("n_rf {}", h.n_rf());
            println!("phase_shifters {}", h.phase_shifter_count());
        }
        Command::Evaluate {
            channels,
            precoder,
            hybrid,
            reference,
        } => {
            let set = io::read_channels(&channels)?;
            let sigma2 = set.config.noise_power;
            let w: FdPrecoder = match (precoder, hybrid) {
                (Some(p), _) => io::read_precoder(&p)?,
                (None, Some(h)) => {
                    let h = io::read_hybrid(&h)?;
                    println!("n_rf {}", h.n_rf());
                    h.reconstruct()
                }
                (None, None) => unreachable!("enforced by clap"),
            };
            let value = min_sinr(&set, &w, sigma2)?;
            println!("min_sinr {value}");
            println!("total_power_watts {}", w.power());
            if let Some(r) = reference {
                let fd = min_sinr(&set, &io::read_precoder(&r)?, sigma2)?;
                match performance_ratio(value, fd) {
                    Some(ratio) => println!("ratio_to_fd {ratio}"),
                    None => println!("ratio_to_fd undefined"),
                }
            }
        }
        Command::Run { spec, output } => {
            let spec = ExperimentSpec::from_file(&spec)?;
            let records = experiment::run_experiment(&spec)?;
            write_output(output.as_deref(), &experiment::format_csv(&records))?;
            let fd: Vec<_> = records
                .iter()
                .filter(|r| r.precoder_kind == mhp_core::PrecoderKind::Fd)
                .collect();
            if !fd.is_empty() && fd.iter().all(|r| r.infeasible) {
                return Err(Failure::Infeasible("every realization was infeasible".into()));
            }
        }
        Command::Report { csv, output } => {
            let records = experiment::read_csv(&csv)?;
            let rows = experiment::aggregate(&records);
            write_output(output.as_deref(), &experiment::format_report(&rows))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(msg)) => {
            eprintln!("mhp: infeasible: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("mhp: error: {msg}");
            ExitCode::from(2)
        }
    }
}
