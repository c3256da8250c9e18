//! Monte Carlo campaign execution.

use rayon::prelude::*;

use crate::channel::{generate_channels, ChannelSet, SystemConfig};
use crate::error::{Error, Result};
use crate::evaluation::{min_sinr, performance_ratio, Metric, PrecoderKind, Problem, ResultRecord};
use crate::fd::{power_control_mmf, power_control_qos, solve_mmf, solve_qos, DesignOptions, FdPrecoder, LinkGains, Targets};
use crate::hybrid::{decompose, quantize_phases, DecomposeOptions, HybridPrecoder, Resolution};
use crate::linalg::{CVector, C64};

use super::spec::ExperimentSpec;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MHP_THREADS";

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const DESIGN_SALT: u64 = 0x6A09_E667_F3BC_C909;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Channel seed of realization `r` at antenna count `n`:
/// `base ⊕ splitmix64(splitmix64(n) ⊕ r)`.
pub fn realization_seed(base_seed: u64, n_antennas: usize, realization: usize) -> u64 {
    base_seed ^ splitmix64(splitmix64(n_antennas as u64) ^ realization as u64)
}

/// Randomization seed used by the precoder design of one realization.
pub fn design_seed(channel_seed: u64) -> u64 {
    splitmix64(channel_seed ^ DESIGN_SALT)
}

/// Worker count from `MHP_THREADS`, or `None` to use the rayon default.
pub fn worker_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

#[derive(Debug, Clone)]
pub struct FdSummary {
    pub precoder: FdPrecoder,
    pub min_sinr: f64,
    pub power: f64,
    /// Relaxation bound: a lower bound on power (QoS) or an upper bound on
    /// the minimum SINR (MMF).
    pub sdr_bound: f64,
}

#[derive(Debug, Clone)]
pub struct HybridSummary {
    pub resolution: Resolution,
    pub n_rf: usize,
    pub min_sinr: f64,
    pub power: f64,
    /// Quantized hybrids only: performance relative to the FD precoder
    /// (min-SINR ratio for MMF, FD power over hybrid power for QoS).
    pub ratio_to_fd: Option<f64>,
    /// False when power control could not meet the QoS targets.
    pub feasible: bool,
}

/// Everything computed for one `(N, realization)` job.
#[derive(Debug, Clone)]
pub struct RealizationOutcome {
    pub n_antennas: usize,
    pub realization: usize,
    pub seed: u64,
    /// `None` when the FD design failed; `failure` says why.
    pub fd: Option<FdSummary>,
    pub failure: Option<String>,
    pub hybrids: Vec<HybridSummary>,
}

fn system_config(spec: &ExperimentSpec, n: usize) -> Result<SystemConfig> {
    let mut cfg = SystemConfig::new(n, spec.group_sizes.clone(), spec.n_paths)?;
    cfg.spacing_ratio = spec.spacing_ratio;
    cfg.noise_power = spec.noise_power;
    cfg.validate()?;
    Ok(cfg)
}

fn unit_columns(w: &FdPrecoder) -> Vec<CVector> {
    (0..w.groups())
        .map(|j| {
            let c = w.column(j);
            let norm = c.norm();
            if norm > 0.0 {
                c / C64::from(norm)
            } else {
                c
            }
        })
        .collect()
}

/// Re-applies the campaign's power-control policy to a quantized hybrid by
/// rescaling its digital columns; the analog network is untouched.
fn repower(spec: &ExperimentSpec, channels: &ChannelSet, h: &HybridPrecoder) -> (HybridPrecoder, bool) {
    let w = h.reconstruct();
    let dirs = unit_columns(&w);
    let gains = LinkGains::from_directions(channels, &dirs);
    let sigma2 = spec.noise_power;
    let (p, feasible) = match spec.problem {
        Problem::Mmf => (power_control_mmf(&gains, spec.power_budget.unwrap_or(0.0), sigma2).0.p, true),
        Problem::Qos => {
            let targets = Targets::uniform(channels, spec.sinr_target.unwrap_or(0.0));
            let alloc = power_control_qos(&gains, &targets.0, sigma2);
            (alloc.p, alloc.converged)
        }
    };
    let mut out = h.clone();
    for j in 0..w.groups() {
        let norm = w.column(j).norm();
        let scale = if norm > 0.0 { p[j].max(0.0).sqrt() / norm } else { 0.0 };
        out.digital.column_mut(j).scale_mut(scale);
    }
    (out, feasible)
}

fn design_fd(spec: &ExperimentSpec, channels: &ChannelSet, seed: u64) -> Result<FdSummary> {
    let options = DesignOptions {
        n_rand: spec.n_rand,
        seed: design_seed(seed),
        ..DesignOptions::default()
    };
    let sigma2 = spec.noise_power;
    let (precoder, sdr_bound) = match spec.problem {
        Problem::Mmf => {
            let d = solve_mmf(channels, spec.power_budget.unwrap_or(0.0), sigma2, &options)?;
            (d.precoder, d.sdr_bound)
        }
        Problem::Qos => {
            let targets = Targets::uniform(channels, spec.sinr_target.unwrap_or(0.0));
            let d = solve_qos(channels, &targets, sigma2, &options)?;
            (d.precoder, d.sdr_bound)
        }
    };
    Ok(FdSummary {
        min_sinr: min_sinr(channels, &precoder, sigma2)?,
        power: precoder.power(),
        precoder,
        sdr_bound,
    })
}

pub fn run_realization(spec: &ExperimentSpec, n_antennas: usize, realization: usize) -> Result<RealizationOutcome> {
    let seed = realization_seed(spec.base_seed, n_antennas, realization);
    let channels = generate_channels(&system_config(spec, n_antennas)?, seed)?;
    let mut outcome = RealizationOutcome {
        n_antennas,
        realization,
        seed,
        fd: None,
        failure: None,
        hybrids: Vec::new(),
    };
    let fd = match design_fd(spec, &channels, seed) {
        Ok(fd) => fd,
        Err(e @ (Error::Infeasible(_) | Error::MaxIterations(_))) => {
            outcome.failure = Some(e.to_string());
            return Ok(outcome);
        }
        Err(e) => return Err(e),
    };

    let options = DecomposeOptions {
        family: spec.family,
        rho_mode: spec.rho_mode,
    };
    let exact = decompose(&fd.precoder, options);
    let sigma2 = spec.noise_power;
    for &resolution in &spec.bits {
        let summary = match resolution {
            Resolution::Infinite => {
                let w = exact.reconstruct();
                HybridSummary {
                    resolution,
                    n_rf: exact.n_rf(),
                    min_sinr: min_sinr(&channels, &w, sigma2)?,
                    power: w.power(),
                    ratio_to_fd: None,
                    feasible: true,
                }
            }
            Resolution::Bits(_) => {
                let (q, feasible) = repower(spec, &channels, &quantize_phases(&exact, resolution));
                let w = q.reconstruct();
                let q_sinr = min_sinr(&channels, &w, sigma2)?;
                let power = w.power();
                let ratio = if !feasible {
                    None
                } else {
                    match spec.problem {
                        Problem::Mmf => performance_ratio(q_sinr, fd.min_sinr),
                        Problem::Qos => performance_ratio(fd.power, power),
                    }
                };
                HybridSummary {
                    resolution,
                    n_rf: q.n_rf(),
                    min_sinr: q_sinr,
                    power,
                    ratio_to_fd: ratio,
                    feasible,
                }
            }
        };
        outcome.hybrids.push(summary);
    }
    outcome.fd = Some(fd);
    Ok(outcome)
}

fn main_metric(problem: Problem) -> Metric {
    match problem {
        Problem::Mmf => Metric::MinSinr,
        Problem::Qos => Metric::TotalPowerWatts,
    }
}

impl RealizationOutcome {
    /// CSV rows of this realization. Per realization: the FD main metric,
    /// the infinite-resolution hybrid main metric (when `inf` is listed), and
    /// the main metric plus `ratio_to_fd` of every finite resolution. The
    /// main metric is the minimum SINR for MMF and the total power for QoS.
    /// A failed FD design flags every row infeasible with a NaN value.
    pub fn records(&self, spec: &ExperimentSpec) -> Vec<ResultRecord> {
        let metric = main_metric(spec.problem);
        let pick = |min_sinr: f64, power: f64| match metric {
            Metric::MinSinr => min_sinr,
            _ => power,
        };
        let record = |kind, bits, metric, value: Option<f64>| ResultRecord {
            experiment_id: spec.name.clone(),
            seed: self.seed,
            n_antennas: self.n_antennas,
            groups: spec.groups(),
            total_k: spec.total_users(),
            n_paths: spec.n_paths,
            bits,
            problem: spec.problem,
            precoder_kind: kind,
            metric,
            value: value.unwrap_or(f64::NAN),
            infeasible: value.is_none(),
        };

        let mut out = Vec::new();
        out.push(record(
            PrecoderKind::Fd,
            Resolution::Infinite,
            metric,
            self.fd.as_ref().map(|fd| pick(fd.min_sinr, fd.power)),
        ));
        for &bits in &spec.bits {
            let h = self.hybrids.iter().find(|h| h.resolution == bits);
            match bits {
                Resolution::Infinite => {
                    out.push(record(PrecoderKind::Hybrid, bits, metric, h.map(|h| pick(h.min_sinr, h.power))));
                }
                Resolution::Bits(_) => {
                    let feasible = h.filter(|h| h.feasible);
                    out.push(record(
                        PrecoderKind::HybridQuantized,
                        bits,
                        metric,
                        feasible.map(|h| pick(h.min_sinr, h.power)),
                    ));
                    out.push(record(
                        PrecoderKind::HybridQuantized,
                        bits,
                        Metric::RatioToFd,
                        feasible.and_then(|h| h.ratio_to_fd),
                    ));
                }
            }
        }
        out
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count()? {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))
}

/// Runs every `(N, realization)` job, in parallel, and returns outcomes in
/// job order.
pub fn run_experiment_detailed(spec: &ExperimentSpec) -> Result<Vec<RealizationOutcome>> {
    let jobs: Vec<(usize, usize)> = spec
        .n_antennas
        .iter()
        .flat_map(|&n| (0..spec.n_realizations).map(move |r| (n, r)))
        .collect();
    pool()?.install(|| {
        jobs.par_iter()
            .map(|&(n, r)| run_realization(spec, n, r))
            .collect::<Result<Vec<_>>>()
    })
}

/// Runs a campaign and returns its records in CSV order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    let outcomes = run_experiment_detailed(spec)?;
    let mut records: Vec<ResultRecord> = outcomes.iter().flat_map(|o| o.records(spec)).collect();
    sort_records(&mut records);
    Ok(records)
}

/// Sorts by `(N, seed, precoder_kind, bits, metric_name)`.
pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}
