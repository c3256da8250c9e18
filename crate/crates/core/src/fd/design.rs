//! QoS and max-min-fair precoder design.
//!
//! Both designs evaluate a candidate set made of the principal eigenvectors
//! of the relaxed solution (candidate 0) followed by `n_rand` Gaussian
//! randomizations (candidates 1..=n_rand). Each candidate only fixes beam
//! directions; powers come from power control. Ties keep the lowest
//! candidate index.

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::sdp::{SdpSettings, SdpStatus};

use super::power_control::{power_control_mmf, power_control_qos, LinkGains};
use super::randomize::{gaussian_randomize, principal_directions};
use super::sdr::{build_qos_sdr, solve_sdr, SdrSolution, Targets};
use super::FdPrecoder;

const MMF_BISECTION_TOL: f64 = 1e-4;
const MMF_MAX_STEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct DesignOptions {
    pub n_rand: usize,
    pub seed: u64,
    pub sdp: SdpSettings,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            n_rand: 100,
            seed: 0,
            sdp: SdpSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QosDesign {
    pub precoder: FdPrecoder,
    pub power: f64,
    /// Relaxation optimum, a lower bound on any feasible power.
    pub sdr_bound: f64,
    pub candidate: usize,
    pub sdr: SdrSolution,
}

#[derive(Debug, Clone)]
pub struct MmfDesign {
    pub precoder: FdPrecoder,
    pub min_sinr: f64,
    /// Upper end of the relaxation bisection; no precoder within the budget
    /// can exceed it.
    pub sdr_bound: f64,
    pub candidate: usize,
    pub bisection_steps: usize,
    pub sdr: Option<SdrSolution>,
}

fn candidates(sdr: &SdrSolution, options: &DesignOptions) -> Vec<Vec<CVector>> {
    let mut all = Vec::with_capacity(options.n_rand + 1);
    all.push(principal_directions(&sdr.x));
    all.extend(gaussian_randomize(&sdr.x, options.n_rand, options.seed));
    all
}

fn validate_options(options: &DesignOptions) -> Result<()> {
    if options.n_rand == 0 {
        return Err(Error::InvalidConfig("n_rand must be at least 1".into()));
    }
    Ok(())
}

/// Minimum-power precoder meeting every SINR target.
pub fn solve_qos(
    channels: &ChannelSet,
    targets: &Targets,
    noise_power: f64,
    options: &DesignOptions,
) -> Result<QosDesign> {
    validate_options(options)?;
    let problem = build_qos_sdr(channels, targets, noise_power, None)?;
    let sdr = solve_sdr(&problem, &options.sdp);
    match sdr.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => return Err(Error::Infeasible("QoS relaxation is infeasible".into())),
        SdpStatus::MaxIterations => return Err(Error::MaxIterations(sdr.iterations)),
    }

    let mut best: Option<(usize, f64, FdPrecoder)> = None;
    for (idx, dirs) in candidates(&sdr, options).into_iter().enumerate() {
        let gains = LinkGains::from_directions(channels, &dirs);
        let alloc = power_control_qos(&gains, &targets.0, noise_power);
        if !alloc.converged {
            continue;
        }
        let power = alloc.total();
        if best.as_ref().is_none_or(|(_, p, _)| power < *p) {
            best = Some((idx, power, FdPrecoder::from_directions(&dirs, &alloc.p)));
        }
    }
    let (candidate, _, precoder) =
        best.ok_or_else(|| Error::Infeasible("no candidate admits a feasible power allocation".into()))?;
    Ok(QosDesign {
        power: precoder.power(),
        precoder,
        sdr_bound: sdr.objective,
        candidate,
        sdr,
    })
}

/// Max-min-fair precoder under total power `budget`.
///
/// The relaxation is bisected on a common SINR target over
/// `[0, min_jk P‖h_jk‖²/σ²]`: a target is accepted when the QoS relaxation
/// solves to optimality with power at most `P`. The relaxed solution at the
/// largest accepted target seeds randomization and max-min power control.
pub fn solve_mmf(channels: &ChannelSet, budget: f64, noise_power: f64, options: &DesignOptions) -> Result<MmfDesign> {
    validate_options(options)?;
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidConfig("power budget must be positive".into()));
    }
    if !(noise_power > 0.0) {
        return Err(Error::InvalidConfig("noise power must be positive".into()));
    }
    let g = channels.groups();
    let mut hi = channels
        .iter()
        .map(|(_, _, h)| budget * h.norm_squared() / noise_power)
        .fold(f64::INFINITY, f64::min);

    let mut lo = 0.0;
    let mut best_sdr: Option<SdrSolution> = None;
    let mut steps = 0;
    if hi > 0.0 {
        while steps < MMF_MAX_STEPS && hi - lo > MMF_BISECTION_TOL * hi {
            steps += 1;
            let mid = 0.5 * (lo + hi);
            let problem = build_qos_sdr(channels, &Targets::uniform(channels, mid), noise_power, None)?;
            let sdr = solve_sdr(&problem, &options.sdp);
            if sdr.status == SdpStatus::Optimal && sdr.objective <= budget {
                lo = mid;
                best_sdr = Some(sdr);
            } else {
                hi = mid;
            }
        }
    } else {
        hi = 0.0;
    }

    let Some(sdr) = best_sdr else {
        // Only reachable when some UE has a zero channel: every SINR target
        // above zero is infeasible, so spread the budget evenly.
        let n = channels.n_antennas();
        let mut e = CVector::zeros(n);
        e[0] = crate::C64::from(1.0);
        let dirs = vec![e; g];
        let precoder = FdPrecoder::from_directions(&dirs, &vec![budget / g as f64; g]);
        let min_sinr = crate::evaluation::min_sinr(channels, &precoder, noise_power)?;
        return Ok(MmfDesign {
            precoder,
            min_sinr,
            sdr_bound: hi,
            candidate: 0,
            bisection_steps: steps,
            sdr: None,
        });
    };

    let mut best: Option<(usize, f64, FdPrecoder)> = None;
    for (idx, dirs) in candidates(&sdr, options).into_iter().enumerate() {
        let gains = LinkGains::from_directions(channels, &dirs);
        let (alloc, gamma) = power_control_mmf(&gains, budget, noise_power);
        if best.as_ref().is_none_or(|(_, b, _)| gamma > *b) {
            best = Some((idx, gamma, FdPrecoder::from_directions(&dirs, &alloc.p)));
        }
    }
    let (candidate, _, precoder) = best.expect("candidate set is never empty");
    let min_sinr = crate::evaluation::min_sinr(channels, &precoder, noise_power)?;
    Ok(MmfDesign {
        precoder,
        min_sinr,
        sdr_bound: hi,
        candidate,
        bisection_steps: steps,
        sdr: Some(sdr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, SystemConfig};
    use crate::evaluation::min_sinr;
    use crate::linalg::C64;

    fn single(h: Vec<C64>) -> ChannelSet {
        let cfg = SystemConfig::new(h.len(), vec![1], 1).unwrap();
        ChannelSet::from_vectors(cfg, 0, vec![vec![CVector::from_vec(h)]]).unwrap()
    }

    fn opts(n_rand: usize) -> DesignOptions {
        DesignOptions {
            n_rand,
            seed: 5,
            sdp: SdpSettings::default(),
        }
    }

    #[test]
    fn qos_single_user_is_matched_filter() {
        let h = vec![C64::new(0.3, -1.1), C64::new(0.8, 0.2), C64::new(-0.5, 0.4)];
        let ch = single(h);
        let hn = ch.get(0, 0).norm_squared();
        let gamma = 5.0;
        let design = solve_qos(&ch, &Targets::uniform(&ch, gamma), 1.0, &opts(20)).unwrap();
        assert!((design.power - gamma / hn).abs() < 1e-9 * (gamma / hn));
        assert!(design.power >= design.sdr_bound - 1e-6);
    }

    #[test]
    fn mmf_scalar_case() {
        let ch = single(vec![C64::new(1.0, 0.0)]);
        let design = solve_mmf(&ch, 10.0, 1.0, &opts(10)).unwrap();
        assert!((design.min_sinr - 10.0).abs() < 1e-9);
        assert!((design.precoder.w[(0, 0)].norm() - 10f64.sqrt()).abs() < 1e-9);
        assert!(design.min_sinr <= design.sdr_bound * (1.0 + 1e-6));
    }

    #[test]
    fn qos_targets_met_and_bounded() {
        let cfg = SystemConfig::new(4, vec![2, 2], 3).unwrap();
        let ch = generate_channels(&cfg, 77).unwrap();
        let targets = Targets::uniform(&ch, 2.0);
        let design = solve_qos(&ch, &targets, 1.0, &opts(30)).unwrap();
        for (j, k, _) in ch.iter() {
            let s = crate::fd::sinr(&ch, &design.precoder, j, k, 1.0).unwrap();
            assert!(s >= 2.0 * (1.0 - 1e-9), "UE ({j},{k}) SINR {s}");
        }
        assert!(design.power >= design.sdr_bound - 1e-6);
    }

    #[test]
    fn mmf_respects_budget_and_bound() {
        let cfg = SystemConfig::new(4, vec![3], 3).unwrap();
        let ch = generate_channels(&cfg, 12).unwrap();
        let design = solve_mmf(&ch, 10.0, 1.0, &opts(30)).unwrap();
        assert!(design.precoder.power() <= 10.0 * (1.0 + 1e-9));
        let achieved = min_sinr(&ch, &design.precoder, 1.0).unwrap();
        assert!((achieved - design.min_sinr).abs() < 1e-12 * achieved);
        assert!(design.min_sinr <= design.sdr_bound * (1.0 + 1e-6));
    }

    #[test]
    fn rejects_zero_randomization() {
        let ch = single(vec![C64::new(1.0, 0.0)]);
        assert!(solve_mmf(&ch, 1.0, 1.0, &opts(0)).is_err());
    }
}
