//! Exact hybrid factorization of fully-digital precoders.
//!
//! Every analog column is the sum of two phase-shifter banks,
//! `w_RF,j = a_j + b_j` with `[a_j]_n = e^{iφ_nj}` and `[b_j]_n = e^{iφ'_nj}`,
//! and the digital stage is `diag(ρ_1, …, ρ_G)`. Entry `α e^{iθ}` of the
//! target is matched exactly when `ρ (e^{iφ} + e^{iφ'}) = α e^{iθ}`, which
//! has a solution iff `α ≤ 2ρ`:
//!
//! ```text
//! φ  = θ ± arccos(α / 2ρ)
//! φ' = θ ∓ arccos(α / 2ρ)
//! ```
//!
//! with `ρ_j = ½ max_n α_nj` (or one shared `ρ` over all groups). A precoder
//! of rank `r < G` is first written as `A B` with `A = U_r Σ_r` and
//! `B = V_r^H`; `A` is factorized with `r` RF chains and the digital stage
//! becomes `diag(ρ) B`. The RF chain count is therefore `min(rank, G)`,
//! using `2 N n_rf` phase shifters.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fd::FdPrecoder;
use crate::linalg::{hermitian_eigen, numerical_rank, wrap_phase, CMatrix, C64};

use nalgebra::DMatrix;

const FEASIBILITY_TOL: f64 = 1e-12;

/// Which of the two sign-symmetric phase solutions to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, PartialOrd, Ord, Hash)]
pub enum PhaseFamily {
    /// `φ = θ + arccos(·)`, `φ' = θ − arccos(·)`.
    #[default]
    Primary,
    /// `φ = θ − arccos(·)`, `φ' = θ + arccos(·)`.
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum RhoMode {
    /// One gain per group, `ρ_j = ½ max_n |W_nj|`.
    #[default]
    PerGroup,
    /// A single multiplier `ρ = ½ max_{n,j} |W_nj|`.
    Uniform,
}

/// Phase-shifter resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resolution {
    /// `b`-bit shifters: phases on the grid `2πk / 2^b`.
    Bits(u32),
    Infinite,
}

impl Resolution {
    pub fn bits(b: u32) -> Result<Self> {
        if b == 0 || b > 52 {
            return Err(Error::InvalidConfig(format!("phase resolution must be 1..=52 bits, got {b}")));
        }
        Ok(Resolution::Bits(b))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Resolution::Infinite)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Bits(b) => write!(f, "{b}"),
            Resolution::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Resolution::Infinite);
        }
        let b: u32 = s
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad phase resolution `{s}`")))?;
        Resolution::bits(b)
    }
}

impl fmt::Display for PhaseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseFamily::Primary => "primary",
            PhaseFamily::Alternate => "alternate",
        })
    }
}

impl FromStr for PhaseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "primary" => Ok(PhaseFamily::Primary),
            "alternate" => Ok(PhaseFamily::Alternate),
            other => Err(Error::InvalidConfig(format!("unknown phase family `{other}`"))),
        }
    }
}

impl fmt::Display for RhoMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RhoMode::PerGroup => "per_group",
            RhoMode::Uniform => "uniform",
        })
    }
}

impl FromStr for RhoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "per_group" | "pergroup" => Ok(RhoMode::PerGroup),
            "uniform" => Ok(RhoMode::Uniform),
            other => Err(Error::InvalidConfig(format!("unknown rho mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecomposeOptions {
    pub family: PhaseFamily,
    pub rho_mode: RhoMode,
}

/// Analog phases of both shifter banks plus the digital stage.
///
/// Phases are stored (not complex values) so every analog term has unit
/// modulus by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    /// `N × n_rf`, bank `a`, in `[0, 2π)`.
    pub phases_a: DMatrix<f64>,
    /// `N × n_rf`, bank `b`, in `[0, 2π)`.
    pub phases_b: DMatrix<f64>,
    /// `n_rf × G`.
    pub digital: CMatrix,
    pub family: PhaseFamily,
    pub resolution: Resolution,
}

impl HybridPrecoder {
    pub fn n_antennas(&self) -> usize {
        self.phases_a.nrows()
    }

    pub fn n_rf(&self) -> usize {
        self.phases_a.ncols()
    }

    pub fn groups(&self) -> usize {
        self.digital.ncols()
    }

    pub fn phase_shifter_count(&self) -> usize {
        2 * self.n_antennas() * self.n_rf()
    }

    /// `W_RF` with entries `e^{iφ_nj} + e^{iφ'_nj}`.
    pub fn analog(&self) -> CMatrix {
        CMatrix::from_fn(self.n_antennas(), self.n_rf(), |n, j| {
            C64::cis(self.phases_a[(n, j)]) + C64::cis(self.phases_b[(n, j)])
        })
    }

    /// `W_RF · W_BB`.
    pub fn reconstruct(&self) -> FdPrecoder {
        FdPrecoder::new(self.analog() * &self.digital)
    }
}

/// `ρ_j = ½ max_n |W_nj|` for every column.
pub fn digital_gains(w: &FdPrecoder) -> Vec<f64> {
    w.w.column_iter()
        .map(|col| 0.5 * col.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .collect()
}

/// Phases `(φ, φ')` with `ρ (e^{iφ} + e^{iφ'}) = α e^{iθ}`, wrapped to `[0, 2π)`.
pub fn phase_solution(alpha: f64, theta: f64, rho: f64, family: PhaseFamily) -> Result<(f64, f64)> {
    if !(rho > 0.0) || alpha < 0.0 {
        return Err(Error::PhaseInfeasible { alpha, rho });
    }
    let ratio = alpha / (2.0 * rho);
    if ratio > 1.0 + FEASIBILITY_TOL {
        return Err(Error::PhaseInfeasible { alpha, rho });
    }
    let delta = ratio.min(1.0).acos();
    let (a, b) = match family {
        PhaseFamily::Primary => (theta + delta, theta - delta),
        PhaseFamily::Alternate => (theta - delta, theta + delta),
    };
    Ok((wrap_phase(a), wrap_phase(b)))
}

/// Factorizes with `n_rf = max(rank, 1)` when `rank < G` and `n_rf = G`
/// otherwise; reconstruction is exact up to rounding.
pub fn decompose(w: &FdPrecoder, options: DecomposeOptions) -> HybridPrecoder {
    let rank = numerical_rank(&w.w);
    if rank < w.groups() {
        decompose_rank_deficient(w, rank, options)
    } else {
        decompose_full_rank(w, options)
    }
}

/// Full-rank path: `n_rf = G` and a diagonal digital stage.
///
/// An all-zero column gets `ρ_j = 1` with banks at `0` and `π`, which cancel.
pub fn decompose_full_rank(w: &FdPrecoder, options: DecomposeOptions) -> HybridPrecoder {
    let n = w.n_antennas();
    let g = w.groups();
    let mut rho = digital_gains(w);
    if options.rho_mode == RhoMode::Uniform {
        let shared = rho.iter().copied().fold(0.0, f64::max);
        rho.iter_mut().for_each(|r| *r = shared);
    }

    let mut phases_a = DMatrix::zeros(n, g);
    let mut phases_b = DMatrix::zeros(n, g);
    for j in 0..g {
        if rho[j] == 0.0 {
            rho[j] = 1.0;
            phases_b.column_mut(j).fill(PI);
            continue;
        }
        for i in 0..n {
            let z = w.w[(i, j)];
            let alpha = z.norm();
            let theta = if alpha > 0.0 { z.arg() } else { 0.0 };
            let (a, b) = phase_solution(alpha, theta, rho[j], options.family)
                .expect("ρ_j is at least half of every magnitude in its column");
            phases_a[(i, j)] = a;
            phases_b[(i, j)] = b;
        }
    }
    let digital = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(g, rho.into_iter().map(C64::from)));
    HybridPrecoder {
        phases_a,
        phases_b,
        digital,
        family: options.family,
        resolution: Resolution::Infinite,
    }
}

/// Rank-deficient path: `W = A B` from the leading right singular vectors, `A` factorized with
/// `max(rank, 1)` RF chains, digital stage `diag(ρ) B`.
pub fn decompose_rank_deficient(w: &FdPrecoder, rank: usize, options: DecomposeOptions) -> HybridPrecoder {
    let n = w.n_antennas();
    let g = w.groups();
    let r = rank.max(1);
    let (a, b) = if rank == 0 {
        (CMatrix::zeros(n, 1), CMatrix::zeros(1, g))
    } else {
        low_rank_factors(&w.w, r)
    };
    let inner = decompose_full_rank(&FdPrecoder::new(a), options);
    let digital = &inner.digital * b;
    HybridPrecoder {
        digital,
        ..inner
    }
}

/// `(W V_r, V_r^H)` with `V_r` the top `r` eigenvectors of `W^H W`, i.e.
/// the leading right singular vectors. The complex SVD in nalgebra returns
/// wrong factors for some rank-deficient inputs; the Hermitian
/// eigensolver does not.
fn low_rank_factors(m: &CMatrix, r: usize) -> (CMatrix, CMatrix) {
    let (_, vectors) = hermitian_eigen(&(m.adjoint() * m));
    let v = vectors.columns(0, r).into_owned();
    (m * &v, v.adjoint())
}

/// Rounds every phase to the nearest point of `{2πk / 2^b}` under circular
/// distance. The digital stage is unchanged.
pub fn quantize_phases(h: &HybridPrecoder, resolution: Resolution) -> HybridPrecoder {
    let Resolution::Bits(bits) = resolution else {
        return h.clone();
    };
    let levels = 2f64.powi(bits as i32);
    let step = std::f64::consts::TAU / levels;
    let q = |phi: f64| {
        let k = (phi / step).round().rem_euclid(levels);
        k * step
    };
    HybridPrecoder {
        phases_a: h.phases_a.map(q),
        phases_b: h.phases_b.map(q),
        digital: h.digital.clone(),
        family: h.family,
        resolution,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::relative_error;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, g: usize) -> CMatrix {
        CMatrix::from_fn(n, g, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn circ_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(std::f64::consts::TAU);
        d.min(std::f64::consts::TAU - d)
    }

    fn reconstructs(alpha: f64, theta: f64, rho: f64, family: PhaseFamily) {
        let (a, b) = phase_solution(alpha, theta, rho, family).unwrap();
        let sum = (C64::cis(a) + C64::cis(b)) * rho;
        assert!((sum - C64::from_polar(alpha, theta)).norm() < 1e-12);
    }

    #[test]
    fn gains_are_half_the_peak() {
        let w = FdPrecoder::new(CMatrix::from_column_slice(
            2,
            1,
            &[C64::new(1.0, 0.0), C64::from_polar(0.5, FRAC_PI_4)],
        ));
        assert_eq!(digital_gains(&w), vec![0.5]);
        assert_eq!(digital_gains(&FdPrecoder::new(CMatrix::zeros(3, 1))), vec![0.0]);
    }

    #[test]
    fn aligned_opposed_and_quarter_phases() {
        let (a, b) = phase_solution(1.0, 0.3, 0.5, PhaseFamily::Primary).unwrap();
        assert!((a - 0.3).abs() < 1e-15 && (b - 0.3).abs() < 1e-15);
        let (a, b) = phase_solution(0.0, 0.0, 0.5, PhaseFamily::Primary).unwrap();
        assert!((a - FRAC_PI_2).abs() < 1e-15);
        assert!(circ_dist(b, -FRAC_PI_2) < 1e-15);
        for fam in [PhaseFamily::Primary, PhaseFamily::Alternate] {
            reconstructs(1.0, 0.3, 0.5, fam);
            reconstructs(0.0, 0.0, 0.5, fam);
            reconstructs(SQRT_2 * 0.7, 2.0, 0.7, fam);
            reconstructs(0.3, -2.5, 4.0, fam);
        }
    }

    #[test]
    fn infeasible_magnitude_is_rejected() {
        assert!(phase_solution(1.0 + 1e-9, 0.0, 0.5, PhaseFamily::Primary).is_err());
        // within the rounding guard
        assert!(phase_solution(1.0 + 1e-13, 0.0, 0.5, PhaseFamily::Primary).is_ok());
    }

    #[test]
    fn hand_checked_two_by_one() {
        let w = FdPrecoder::new(CMatrix::from_column_slice(
            2,
            1,
            &[C64::new(1.0, 0.0), C64::from_polar(0.5, FRAC_PI_4)],
        ));
        let h = decompose(&w, DecomposeOptions::default());
        assert_eq!(h.n_rf(), 1);
        assert_eq!(h.digital[(0, 0)], C64::from(0.5));
        assert_eq!(h.phases_a[(0, 0)], 0.0);
        assert_eq!(h.phases_b[(0, 0)], 0.0);
        assert!(circ_dist(h.phases_a[(1, 0)], FRAC_PI_4 + FRAC_PI_3) < 1e-14);
        assert!(circ_dist(h.phases_b[(1, 0)], FRAC_PI_4 - FRAC_PI_3) < 1e-14);
        assert!(relative_error(&h.reconstruct().w, &w.w) < 1e-15);
    }

    #[test]
    fn random_full_rank_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &n in &[4, 8, 16, 64] {
            for g in 1..=3 {
                let w = FdPrecoder::new(random_matrix(&mut rng, n, g));
                for fam in [PhaseFamily::Primary, PhaseFamily::Alternate] {
                    for rho_mode in [RhoMode::PerGroup, RhoMode::Uniform] {
                        let h = decompose(&w, DecomposeOptions { family: fam, rho_mode });
                        assert_eq!(h.n_rf(), g);
                        assert!(relative_error(&h.reconstruct().w, &w.w) <= 1e-10);
                        assert_eq!(h.phase_shifter_count(), 2 * n * g);
                    }
                }
            }
        }
    }

    #[test]
    fn families_swap_banks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = FdPrecoder::new(random_matrix(&mut rng, 6, 2));
        let p = decompose(&w, DecomposeOptions::default());
        let a = decompose(
            &w,
            DecomposeOptions {
                family: PhaseFamily::Alternate,
                ..Default::default()
            },
        );
        assert_eq!(p.phases_a, a.phases_b);
        assert_eq!(p.phases_b, a.phases_a);
    }

    #[test]
    fn identical_columns_need_one_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let col = random_matrix(&mut rng, 5, 1);
        let w = FdPrecoder::new(CMatrix::from_fn(5, 2, |i, _| col[(i, 0)]));
        let h = decompose(&w, DecomposeOptions::default());
        assert_eq!(h.n_rf(), 1);
        assert!(relative_error(&h.reconstruct().w, &w.w) <= 1e-10);
    }

    #[test]
    fn zero_matrix_uses_single_chain() {
        let w = FdPrecoder::new(CMatrix::zeros(4, 3));
        let h = decompose(&w, DecomposeOptions::default());
        assert_eq!(h.n_rf(), 1);
        assert!(h.digital.iter().all(|z| *z == C64::from(0.0)));
        assert!(h.reconstruct().w.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn zero_column_cancels() {
        let mut w = CMatrix::zeros(3, 2);
        w[(0, 0)] = C64::new(1.0, 0.0);
        w[(1, 0)] = C64::new(0.0, 2.0);
        w[(2, 1)] = C64::new(0.5, 0.5);
        w.column_mut(1).fill(C64::from(0.0));
        // rank 1 < G, so take the full-rank path directly to hit the rule
        let h = decompose_full_rank(&FdPrecoder::new(w.clone()), DecomposeOptions::default());
        assert_eq!(h.digital[(1, 1)], C64::from(1.0));
        assert!(relative_error(&h.reconstruct().w, &w) < 1e-15);
    }

    #[test]
    fn product_of_thin_factors_has_rank_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = FdPrecoder::new(random_matrix(&mut rng, 10, 2) * random_matrix(&mut rng, 2, 3));
        let h = decompose(&w, DecomposeOptions::default());
        assert_eq!(h.n_rf(), 2);
        assert!(relative_error(&h.reconstruct().w, &w.w) <= 1e-10);
    }

    #[test]
    fn quantization_grid_examples() {
        let h = HybridPrecoder {
            phases_a: DMatrix::from_element(1, 1, FRAC_PI_3),
            phases_b: DMatrix::from_element(1, 1, 3.0 * PI / 5.0),
            digital: CMatrix::identity(1, 1),
            family: PhaseFamily::Primary,
            resolution: Resolution::Infinite,
        };
        let q1 = quantize_phases(&h, Resolution::Bits(1));
        assert_eq!(q1.phases_a[(0, 0)], 0.0);
        let q2 = quantize_phases(&h, Resolution::Bits(2));
        assert!((q2.phases_b[(0, 0)] - FRAC_PI_2).abs() < 1e-15);
        // near 2π wraps to zero
        let near = HybridPrecoder {
            phases_a: DMatrix::from_element(1, 1, std::f64::consts::TAU - 0.01),
            ..h.clone()
        };
        assert_eq!(quantize_phases(&near, Resolution::Bits(3)).phases_a[(0, 0)], 0.0);
        assert_eq!(quantize_phases(&h, Resolution::Infinite), h);
    }

    #[test]
    fn resolution_parsing() {
        assert_eq!("inf".parse::<Resolution>().unwrap(), Resolution::Infinite);
        assert_eq!("4".parse::<Resolution>().unwrap(), Resolution::Bits(4));
        assert!("0".parse::<Resolution>().is_err());
        assert!(Resolution::Bits(8) < Resolution::Infinite);
    }
}
