//! Multigroup power control for fixed beam directions.
//!
//! With unit directions `d_i` fixed, the SINR of UE `(j, k)` is
//! `p_j g_jjk / (Σ_{i≠j} p_i g_ijk + σ²)` where `g_ijk = |h_jk^H d_i|²`.
//! QoS power control iterates the standard interference function
//! `p_j ← max_k γ_jk (Σ_{i≠j} p_i g_ijk + σ²) / g_jjk` from zero, which
//! converges monotonically to the componentwise-minimal feasible vector when
//! one exists. Once the maximizing UE of every group settles, the fixed point
//! is obtained exactly from the corresponding `G × G` linear system and
//! accepted only if it reproduces itself under the update.

use nalgebra::{DMatrix, DVector};

use crate::channel::ChannelSet;
use crate::linalg::CVector;

use super::beam_gain;

const MAX_ITERATIONS: usize = 500;
const DIVERGENCE_FACTOR: f64 = 1e6;
const FIXED_POINT_TOL: f64 = 1e-12;
const MMF_BISECTION_TOL: f64 = 1e-4;

/// Beam gains `g[i][j][k]`: power delivered by the unit beam of group `i`
/// to UE `k` of group `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    g: Vec<Vec<Vec<f64>>>,
}

impl LinkGains {
    /// Wraps explicit gains, indexed `[beam][group][ue]`.
    pub fn new(g: Vec<Vec<Vec<f64>>>) -> Self {
        debug_assert!(g.iter().all(|beam| beam.len() == g.len()));
        LinkGains { g }
    }

    pub fn from_directions(channels: &ChannelSet, directions: &[CVector]) -> Self {
        let g = directions
            .iter()
            .map(|d| {
                channels
                    .channels
                    .iter()
                    .map(|group| group.iter().map(|h| beam_gain(h, d)).collect())
                    .collect()
            })
            .collect();
        LinkGains { g }
    }

    pub fn groups(&self) -> usize {
        self.g.len()
    }

    pub fn ues(&self, group: usize) -> usize {
        self.g[0][group].len()
    }

    pub fn get(&self, beam: usize, group: usize, ue: usize) -> f64 {
        self.g[beam][group][ue]
    }

    fn interference(&self, p: &[f64], group: usize, ue: usize) -> f64 {
        (0..self.groups())
            .filter(|&i| i != group)
            .map(|i| p[i] * self.g[i][group][ue])
            .sum()
    }

    pub fn sinr(&self, p: &[f64], group: usize, ue: usize, noise_power: f64) -> f64 {
        p[group] * self.g[group][group][ue] / (self.interference(p, group, ue) + noise_power)
    }

    pub fn min_sinr(&self, p: &[f64], noise_power: f64) -> f64 {
        (0..self.groups())
            .flat_map(|j| (0..self.ues(j)).map(move |k| (j, k)))
            .map(|(j, k)| self.sinr(p, j, k, noise_power))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
    pub converged: bool,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// One application of the interference function; also reports the
/// maximizing UE of each group.
fn update(gains: &LinkGains, targets: &[Vec<f64>], noise_power: f64, p: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let g = gains.groups();
    let mut next = vec![0.0; g];
    let mut arg = vec![0; g];
    for j in 0..g {
        let mut best = f64::NEG_INFINITY;
        for k in 0..gains.ues(j) {
            let v = targets[j][k] * (gains.interference(p, j, k) + noise_power) / gains.get(j, j, k);
            if v > best {
                best = v;
                arg[j] = k;
            }
        }
        next[j] = best;
    }
    (next, arg)
}

/// Exact fixed point for a fixed choice of maximizing UE per group.
fn solve_pattern(gains: &LinkGains, targets: &[Vec<f64>], noise_power: f64, pattern: &[usize]) -> Option<Vec<f64>> {
    let g = gains.groups();
    let mut m = DMatrix::<f64>::identity(g, g);
    let mut rhs = DVector::<f64>::zeros(g);
    for j in 0..g {
        let k = pattern[j];
        let scale = targets[j][k] / gains.get(j, j, k);
        for i in 0..g {
            if i != j {
                m[(j, i)] = -scale * gains.get(i, j, k);
            }
        }
        rhs[j] = scale * noise_power;
    }
    let p = m.lu().solve(&rhs)?;
    if p.iter().all(|v| v.is_finite() && *v >= 0.0) {
        Some(p.iter().copied().collect())
    } else {
        None
    }
}

fn is_fixed_point(gains: &LinkGains, targets: &[Vec<f64>], noise_power: f64, p: &[f64]) -> bool {
    let (next, _) = update(gains, targets, noise_power, p);
    next.iter().zip(p).all(|(a, b)| (a - b).abs() <= FIXED_POINT_TOL * b.abs().max(f64::MIN_POSITIVE))
}

/// Minimal powers meeting every SINR target with the given beams.
///
/// `converged == false` means no feasible allocation was found for these
/// directions: a zero own-gain, divergence past `10⁶ · Σγσ² / min g`, or
/// 500 iterations without reaching the fixed point.
pub fn power_control_qos(gains: &LinkGains, targets: &[Vec<f64>], noise_power: f64) -> PowerAllocation {
    let g = gains.groups();
    let fail = || PowerAllocation {
        p: vec![0.0; g],
        converged: false,
    };
    let mut min_gain = f64::INFINITY;
    let mut demand = 0.0;
    for j in 0..g {
        for k in 0..gains.ues(j) {
            let own = gains.get(j, j, k);
            if !(own > 0.0) {
                return fail();
            }
            min_gain = min_gain.min(own);
            demand += targets[j][k] * noise_power;
        }
    }
    let limit = DIVERGENCE_FACTOR * demand / min_gain;

    let mut p = vec![0.0; g];
    let mut last_pattern: Option<Vec<usize>> = None;
    for _ in 0..MAX_ITERATIONS {
        let (next, pattern) = update(gains, targets, noise_power, &p);
        if !next.iter().all(|v| v.is_finite()) || next.iter().sum::<f64>() > limit {
            return fail();
        }
        let settled = next
            .iter()
            .zip(&p)
            .all(|(a, b)| (a - b).abs() <= FIXED_POINT_TOL * a.abs().max(f64::MIN_POSITIVE));
        p = next;
        if settled {
            return PowerAllocation { p, converged: true };
        }
        if last_pattern.as_ref() == Some(&pattern) {
            if let Some(exact) = solve_pattern(gains, targets, noise_power, &pattern) {
                if is_fixed_point(gains, targets, noise_power, &exact) {
                    return PowerAllocation {
                        p: exact,
                        converged: true,
                    };
                }
            }
        }
        last_pattern = Some(pattern);
    }
    fail()
}

/// Max-min-fair powers under a total budget `P`.
///
/// Bisects a common SINR target on `[0, min_jk P g_jjk / σ²]` until the
/// interval is below `1e-4` relative, keeping the last feasible allocation,
/// then scales that allocation up to spend the whole budget. Returns the
/// allocation and its achieved minimum SINR.
pub fn power_control_mmf(gains: &LinkGains, budget: f64, noise_power: f64) -> (PowerAllocation, f64) {
    let g = gains.groups();
    let mut hi = f64::INFINITY;
    for j in 0..g {
        for k in 0..gains.ues(j) {
            hi = hi.min(budget * gains.get(j, j, k) / noise_power);
        }
    }
    if !(hi > 0.0) || !hi.is_finite() {
        let p = vec![budget / g as f64; g];
        let gamma = gains.min_sinr(&p, noise_power);
        return (PowerAllocation { p, converged: false }, gamma.max(0.0));
    }

    let targets_for = |gamma: f64| -> Vec<Vec<f64>> { (0..g).map(|j| vec![gamma; gains.ues(j)]).collect() };
    let mut lo = 0.0;
    let mut best: Option<Vec<f64>> = None;
    for _ in 0..200 {
        if hi - lo <= MMF_BISECTION_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let alloc = power_control_qos(gains, &targets_for(mid), noise_power);
        if alloc.converged && alloc.total() <= budget {
            lo = mid;
            best = Some(alloc.p);
        } else {
            hi = mid;
        }
    }

    let Some(mut p) = best else {
        let p = vec![budget / g as f64; g];
        let gamma = gains.min_sinr(&p, noise_power);
        return (PowerAllocation { p, converged: false }, gamma);
    };
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        let scale = budget / total;
        p.iter_mut().for_each(|v| *v *= scale);
    }
    let gamma = gains.min_sinr(&p, noise_power);
    (PowerAllocation { p, converged: true }, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_pair(own: f64, cross: f64) -> LinkGains {
        LinkGains::new(vec![vec![vec![own], vec![cross]], vec![vec![cross], vec![own]]])
    }

    #[test]
    fn interference_free_single_step() {
        let gains = LinkGains::new(vec![vec![vec![2.0, 0.5, 1.0]]]);
        let alloc = power_control_qos(&gains, &[vec![3.0, 3.0, 3.0]], 1.0);
        assert!(alloc.converged);
        assert!((alloc.p[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_two_group_fixed_point() {
        // p = 1·(0.1 p + 1)  ⇒  p = 1 / 0.9
        let alloc = power_control_qos(&symmetric_pair(1.0, 0.1), &[vec![1.0], vec![1.0]], 1.0);
        assert!(alloc.converged);
        for p in &alloc.p {
            assert!((p - 1.0 / 0.9).abs() < 1e-8);
        }
    }

    #[test]
    fn spectral_radius_above_one_diverges() {
        // normalized interference matrix γ·[[0,1],[1,0]] has radius 1.5
        let alloc = power_control_qos(&symmetric_pair(1.0, 1.0), &[vec![1.5], vec![1.5]], 1.0);
        assert!(!alloc.converged);
    }

    #[test]
    fn zero_own_gain_is_infeasible() {
        let gains = LinkGains::new(vec![vec![vec![0.0, 1.0]]]);
        assert!(!power_control_qos(&gains, &[vec![1.0, 1.0]], 1.0).converged);
    }

    #[test]
    fn mmf_single_user() {
        let gains = LinkGains::new(vec![vec![vec![1.0]]]);
        let (alloc, gamma) = power_control_mmf(&gains, 10.0, 1.0);
        assert!((gamma - 10.0).abs() < 1e-12);
        assert!((alloc.p[0] - 10.0).abs() < 1e-12);
        let (_, doubled) = power_control_mmf(&gains, 20.0, 1.0);
        assert!((doubled - 20.0).abs() < 1e-12);
    }

    #[test]
    fn mmf_two_group_balance() {
        // Balanced symmetric solution: p = P/2, γ = (P/2) / (0.1·P/2 + 1).
        let gains = symmetric_pair(1.0, 0.1);
        for &budget in &[1.0, 10.0, 1e3, 1e6] {
            let (alloc, gamma) = power_control_mmf(&gains, budget, 1.0);
            let half = budget / 2.0;
            let exact = half / (0.1 * half + 1.0);
            assert!((alloc.total() - budget).abs() <= 1e-9 * budget);
            assert!((gamma - exact).abs() <= 1e-4 * exact, "P={budget}: {gamma} vs {exact}");
        }
        // interference-limited value 1/0.1
        let (_, gamma) = power_control_mmf(&gains, 1e9, 1.0);
        assert!((gamma - 10.0).abs() < 1e-3);
    }

    #[test]
    fn mmf_monotone_in_budget() {
        let gains = LinkGains::new(vec![
            vec![vec![1.2, 0.7], vec![0.3]],
            vec![vec![0.2, 0.4], vec![0.9]],
        ]);
        let mut last = 0.0;
        for e in 0..12 {
            let budget = 0.1 * 2f64.powi(e);
            let (alloc, gamma) = power_control_mmf(&gains, budget, 1.0);
            assert!(alloc.total() <= budget * (1.0 + 1e-9));
            assert!(gamma >= last, "budget {budget}: {gamma} < {last}");
            last = gamma;
        }
    }
}
