//! Geometric mmWave multicast channels over a uniform linear array.
//!
//! Each UE `(j, k)` sees `L` paths with complex gains `α ~ CN(0, 1)` and
//! azimuths uniform on `[0, 2π)`:
//!
//! ```text
//! h_jk^H = sqrt(N / L) · Σ_l α_jkl · a^H(φ_jkl)
//! ```
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`).
//! Draws are consumed in a fixed order: group `j` outermost, UE `k`, then
//! path `l`; for each path the gain (real part, imaginary part) is drawn
//! before the angle. Complex Gaussians are two independent standard normals
//! scaled by `1/√2`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

/// Antenna array and user population of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_antennas: usize,
    /// `K_j` for each group; the number of groups is `group_sizes.len()`.
    pub group_sizes: Vec<usize>,
    pub n_paths: usize,
    /// Antenna spacing in wavelengths, `Δ/λ`.
    pub spacing_ratio: f64,
    /// Receiver noise power σ² in Watts.
    pub noise_power: f64,
}

impl SystemConfig {
    pub fn new(n_antennas: usize, group_sizes: Vec<usize>, n_paths: usize) -> Result<Self> {
        let cfg = SystemConfig {
            n_antennas,
            group_sizes,
            n_paths,
            spacing_ratio: 0.5,
            noise_power: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if self.group_sizes.is_empty() {
            return Err(Error::InvalidConfig("G must be at least 1".into()));
        }
        if self.group_sizes.iter().any(|&k| k == 0) {
            return Err(Error::InvalidConfig("every group needs at least one UE".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("L must be at least 1".into()));
        }
        if !(self.spacing_ratio > 0.0 && self.spacing_ratio.is_finite()) {
            return Err(Error::InvalidConfig("antenna spacing must be positive".into()));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidConfig("noise power must be positive".into()));
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn total_users(&self) -> usize {
        self.group_sizes.iter().sum()
    }
}

/// Channel vectors `h_jk`, indexed `[group][ue]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub config: SystemConfig,
    pub seed: u64,
    pub channels: Vec<Vec<CVector>>,
}

impl ChannelSet {
    /// Builds a channel set from explicit vectors, checking shapes against
    /// `config`.
    pub fn from_vectors(config: SystemConfig, seed: u64, channels: Vec<Vec<CVector>>) -> Result<Self> {
        config.validate()?;
        if channels.len() != config.groups() {
            return Err(Error::DimensionMismatch(format!(
                "{} channel groups for G = {}",
                channels.len(),
                config.groups()
            )));
        }
        for (j, group) in channels.iter().enumerate() {
            if group.len() != config.group_sizes[j] {
                return Err(Error::DimensionMismatch(format!(
                    "group {j} has {} channels, expected {}",
                    group.len(),
                    config.group_sizes[j]
                )));
            }
            if let Some(h) = group.iter().find(|h| h.len() != config.n_antennas) {
                return Err(Error::DimensionMismatch(format!(
                    "channel of length {} in group {j}, expected N = {}",
                    h.len(),
                    config.n_antennas
                )));
            }
        }
        Ok(ChannelSet { config, seed, channels })
    }

    pub fn n_antennas(&self) -> usize {
        self.config.n_antennas
    }

    pub fn groups(&self) -> usize {
        self.channels.len()
    }

    pub fn get(&self, group: usize, ue: usize) -> &CVector {
        &self.channels[group][ue]
    }

    /// Iterates `(group, ue, h)` in group-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &CVector)> {
        self.channels
            .iter()
            .enumerate()
            .flat_map(|(j, g)| g.iter().enumerate().map(move |(k, h)| (j, k, h)))
    }
}

/// ULA response `a(φ)` with entries `exp(i·2π·Δ/λ·n·sin φ) / √N`.
pub fn array_response(phi: f64, n_antennas: usize, spacing_ratio: f64) -> CVector {
    let norm = 1.0 / (n_antennas as f64).sqrt();
    let step = TAU * spacing_ratio * phi.sin();
    CVector::from_fn(n_antennas, |n, _| C64::from_polar(norm, step * n as f64))
}

/// `h = sqrt(N / L) · Σ_l conj(α_l) · a(φ_l)` for explicit path parameters.
pub fn channel_from_paths(n_antennas: usize, spacing_ratio: f64, paths: &[(C64, f64)]) -> CVector {
    let scale = (n_antennas as f64 / paths.len() as f64).sqrt();
    let mut h = CVector::zeros(n_antennas);
    for &(gain, phi) in paths {
        h += array_response(phi, n_antennas, spacing_ratio) * gain.conj();
    }
    h * C64::from(scale)
}

/// Standard circularly-symmetric complex Gaussian sample.
pub(crate) fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn generate_channels(config: &SystemConfig, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut paths = Vec::with_capacity(config.n_paths);
    let channels = config
        .group_sizes
        .iter()
        .map(|&k_j| {
            (0..k_j)
                .map(|_| {
                    paths.clear();
                    for _ in 0..config.n_paths {
                        let gain = complex_gaussian(&mut rng);
                        let phi = rng.random::<f64>() * 2.0 * PI;
                        paths.push((gain, phi));
                    }
                    channel_from_paths(config.n_antennas, config.spacing_ratio, &paths)
                })
                .collect()
        })
        .collect();
    Ok(ChannelSet {
        config: config.clone(),
        seed,
        channels,
    })
}
