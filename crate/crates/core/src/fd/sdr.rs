//! Semidefinite relaxation of the multigroup QoS problem
//!
//! ```text
//! minimize    Σ_j tr(X_j)
//! subject to  h_jk^H X_j h_jk − γ_jk · Σ_{i≠j} h_jk^H X_i h_jk ≥ γ_jk σ²
//!             [Σ_j tr(X_j) ≤ P]            (feasibility mode only)
//!             X_j ⪰ 0
//! ```
//!
//! Each complex Hermitian block is mapped to a real symmetric block of size
//! `2N` through `[Re, −Im; Im, Re]`. Trace inner products double under the
//! embedding, so every coefficient matrix is halved. Inequalities get one
//! nonnegative slack each.

use nalgebra::{DMatrix, DVector};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{complex_from_embedding, hermitian_part, real_embed, CMatrix, CVector};
use crate::sdp::{self, smat, svec, svec_dim, ConeProgram, SdpSettings, SdpStatus};

/// Per-UE SINR targets, indexed `[group][ue]` like the channel set.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets(pub Vec<Vec<f64>>);

impl Targets {
    pub fn uniform(channels: &ChannelSet, gamma: f64) -> Self {
        Targets(channels.channels.iter().map(|g| vec![gamma; g.len()]).collect())
    }

    pub fn get(&self, group: usize, ue: usize) -> f64 {
        self.0[group][ue]
    }

    fn check(&self, channels: &ChannelSet) -> Result<()> {
        let shape_ok = self.0.len() == channels.groups()
            && self.0.iter().zip(&channels.channels).all(|(t, c)| t.len() == c.len());
        if !shape_ok {
            return Err(Error::DimensionMismatch("SINR targets do not match the UE layout".into()));
        }
        if self.0.iter().flatten().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidConfig("SINR targets must be positive and finite".into()));
        }
        Ok(())
    }
}

/// A built relaxation: the conic program plus the layout needed to map its
/// solution back to complex matrices.
#[derive(Debug, Clone)]
pub struct QosSdr {
    pub program: ConeProgram,
    pub n_antennas: usize,
    pub groups: usize,
    pub n_ues: usize,
    pub power_budget: Option<f64>,
}

impl QosSdr {
    pub fn n_inequalities(&self) -> usize {
        self.program.n_nonneg
    }

    pub fn n_psd_blocks(&self) -> usize {
        self.program.psd_blocks.len()
    }

    /// Left-hand side of constraint `row` (without its slack) evaluated at
    /// the complex matrices `xs`.
    pub fn constraint_lhs(&self, row: usize, xs: &[CMatrix]) -> f64 {
        let d = svec_dim(2 * self.n_antennas);
        xs.iter()
            .enumerate()
            .map(|(i, x)| {
                let v = svec(&real_embed(x));
                let coeffs = self.program.a.row(row);
                (0..d).map(|t| coeffs[i * d + t] * v[t]).sum::<f64>()
            })
            .sum()
    }

    pub fn rhs(&self, row: usize) -> f64 {
        self.program.b[row]
    }
}

fn outer_coeffs(h: &CVector) -> Vec<f64> {
    let hh = h * h.adjoint();
    svec(&(real_embed(&hh) * 0.5))
}

pub fn build_qos_sdr(
    channels: &ChannelSet,
    targets: &Targets,
    noise_power: f64,
    power_budget: Option<f64>,
) -> Result<QosSdr> {
    targets.check(channels)?;
    if !(noise_power > 0.0) {
        return Err(Error::InvalidConfig("noise power must be positive".into()));
    }
    let n = channels.n_antennas();
    let g = channels.groups();
    let block = 2 * n;
    let d = svec_dim(block);
    let n_ues: usize = channels.channels.iter().map(Vec::len).sum();
    let n_rows = n_ues + usize::from(power_budget.is_some());
    let n_vars = g * d + n_rows;

    let trace_coeffs = svec(&(DMatrix::<f64>::identity(block, block) * 0.5));
    let mut c = DVector::zeros(n_vars);
    for j in 0..g {
        c.rows_mut(j * d, d).copy_from_slice(&trace_coeffs);
    }

    let mut a = DMatrix::zeros(n_rows, n_vars);
    let mut b = DVector::zeros(n_rows);
    for (row, (j, k, h)) in channels.iter().enumerate() {
        let gamma = targets.get(j, k);
        let coeffs = outer_coeffs(h);
        for i in 0..g {
            let scale = if i == j { 1.0 } else { -gamma };
            for (t, &v) in coeffs.iter().enumerate() {
                a[(row, i * d + t)] = scale * v;
            }
        }
        a[(row, g * d + row)] = -1.0;
        b[row] = gamma * noise_power;
    }
    if let Some(p) = power_budget {
        let row = n_ues;
        for j in 0..g {
            for (t, &v) in trace_coeffs.iter().enumerate() {
                a[(row, j * d + t)] = v;
            }
        }
        a[(row, g * d + row)] = 1.0;
        b[row] = p;
    }

    Ok(QosSdr {
        program: ConeProgram {
            psd_blocks: vec![block; g],
            n_nonneg: n_rows,
            c,
            a,
            b,
        },
        n_antennas: n,
        groups: g,
        n_ues,
        power_budget,
    })
}

/// Relaxed solution mapped back to complex Hermitian PSD matrices.
#[derive(Debug, Clone)]
pub struct SdrSolution {
    pub x: Vec<CMatrix>,
    /// `Σ_j tr(X_j)` at the returned point.
    pub objective: f64,
    pub status: SdpStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

pub fn solve_sdr(sdr: &QosSdr, settings: &SdpSettings) -> SdrSolution {
    let sol = sdp::solve(&sdr.program, settings);
    let block = 2 * sdr.n_antennas;
    let d = svec_dim(block);
    let x = (0..sdr.groups)
        .map(|j| {
            let y = smat(&sol.x.as_slice()[j * d..(j + 1) * d], block);
            hermitian_part(&complex_from_embedding(&y))
        })
        .collect();
    SdrSolution {
        x,
        objective: sol.objective,
        status: sol.status,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        iterations: sol.iterations,
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::channel::{generate_channels, SystemConfig};
    use crate::linalg::{hermitian_eigen, C64};

    fn unit_channel() -> ChannelSet {
        let cfg = SystemConfig::new(1, vec![1], 1).unwrap();
        ChannelSet::from_vectors(cfg, 0, vec![vec![CVector::from_element(1, C64::new(1.0, 0.0))]]).unwrap()
    }

    #[test]
    fn scalar_instance_reduces_to_bound() {
        let ch = unit_channel();
        let sdr = build_qos_sdr(&ch, &Targets::uniform(&ch, 4.0), 1.0, None).unwrap();
        assert_eq!(sdr.n_inequalities(), 1);
        assert_eq!(sdr.n_psd_blocks(), 1);
        assert_eq!(sdr.rhs(0), 4.0);
        let sol = solve_sdr(&sdr, &SdpSettings::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective - 4.0).abs() < 1e-6);
        assert!((sol.x[0][(0, 0)].re - 4.0).abs() < 1e-6);
    }

    #[test]
    fn counts_constraints_and_blocks() {
        let cfg = SystemConfig::new(3, vec![3, 4], 2).unwrap();
        let ch = generate_channels(&cfg, 5).unwrap();
        let sdr = build_qos_sdr(&ch, &Targets::uniform(&ch, 2.0), 1.0, None).unwrap();
        assert_eq!(sdr.n_inequalities(), 7);
        assert_eq!(sdr.n_psd_blocks(), 2);
        let with_budget = build_qos_sdr(&ch, &Targets::uniform(&ch, 2.0), 1.0, Some(10.0)).unwrap();
        assert_eq!(with_budget.n_inequalities(), 8);
    }

    #[test]
    fn coefficients_match_direct_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = SystemConfig::new(4, vec![2, 3], 3).unwrap();
        let ch = generate_channels(&cfg, 8).unwrap();
        let targets = Targets(vec![vec![1.5, 3.0], vec![0.5, 2.0, 7.0]]);
        let sdr = build_qos_sdr(&ch, &targets, 1.0, None).unwrap();
        let xs: Vec<CMatrix> = (0..2)
            .map(|_| {
                let m = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                &m * m.adjoint()
            })
            .collect();
        for (row, (j, k, h)) in ch.iter().enumerate() {
            let quad = |x: &CMatrix| (h.adjoint() * x * h)[(0, 0)].re;
            let gamma = targets.get(j, k);
            let expected = quad(&xs[j]) - gamma * (0..2).filter(|&i| i != j).map(|i| quad(&xs[i])).sum::<f64>();
            let got = sdr.constraint_lhs(row, &xs);
            assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0), "row {row}: {got} vs {expected}");
        }
    }

    #[test]
    fn single_user_matches_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let gamma = 3.0;
        for trial in 0..20 {
            let n = 1 + trial % 4;
            let h = CVector::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let cfg = SystemConfig::new(n, vec![1], 1).unwrap();
            let ch = ChannelSet::from_vectors(cfg, 0, vec![vec![h.clone()]]).unwrap();
            let sdr = build_qos_sdr(&ch, &Targets::uniform(&ch, gamma), 1.0, None).unwrap();
            let sol = solve_sdr(&sdr, &SdpSettings::default());
            assert_eq!(sol.status, SdpStatus::Optimal);
            let hn = h.norm_squared();
            let expected_obj = gamma / hn;
            assert!((sol.objective - expected_obj).abs() < 1e-6 * expected_obj, "trial {trial}");
            let expected_x = (&h * h.adjoint()) * C64::from(gamma / (hn * hn));
            let err = (&sol.x[0] - &expected_x).norm();
            assert!(err < 1e-6 * expected_x.norm(), "trial {trial}: ‖X − X*‖ = {err}");
            let (vals, _) = hermitian_eigen(&sol.x[0]);
            if n > 1 {
                assert!(vals[1].abs() / vals[0] <= 1e-6, "trial {trial}: rank ratio {}", vals[1] / vals[0]);
            }
        }
    }

    #[test]
    fn budget_below_single_user_bound_is_infeasible() {
        // Two UEs; γ above P‖h‖²/σ² for one of them cannot fit in power P.
        let cfg = SystemConfig::new(2, vec![2], 1).unwrap();
        let h1 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let h2 = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let ch = ChannelSet::from_vectors(cfg, 0, vec![vec![h1, h2]]).unwrap();
        let p = 1.0;
        let gamma = 2.0 * p; // exceeds P·‖h‖²/σ² = 1
        let sdr = build_qos_sdr(&ch, &Targets::uniform(&ch, gamma), 1.0, Some(p)).unwrap();
        let sol = solve_sdr(&sdr, &SdpSettings::default());
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }
}
