//! Fully-digital multicast precoder design.
//!
//! The pipeline follows the usual semidefinite-relaxation recipe: lift each
//! group beamformer `w_j` to `X_j = w_j w_j^H`, drop the rank constraint and
//! solve the resulting SDP ([`sdr`]), draw candidate directions from the
//! relaxed solution ([`randomize`]), then restore feasibility or fairness by
//! per-group power control ([`power_control`]). [`design`] ties the steps
//! together for the QoS and max-min-fair problems.

pub mod design;
pub mod power_control;
pub mod randomize;
pub mod sdr;

pub use design::{solve_mmf, solve_qos, DesignOptions, MmfDesign, QosDesign};
pub use power_control::{power_control_mmf, power_control_qos, LinkGains, PowerAllocation};
pub use randomize::{gaussian_randomize, principal_directions};
pub use sdr::{build_qos_sdr, solve_sdr, QosSdr, SdrSolution, Targets};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, inner, CMatrix, CVector};

/// Fully-digital precoder `W = [w_1, …, w_G]`, one column per group.
#[derive(Debug, Clone, PartialEq)]
pub struct FdPrecoder {
    pub w: CMatrix,
}

impl FdPrecoder {
    pub fn new(w: CMatrix) -> Self {
        FdPrecoder { w }
    }

    /// Stacks unit directions scaled by `sqrt(p_j)`.
    pub fn from_directions(directions: &[CVector], powers: &[f64]) -> Self {
        let n = directions.first().map_or(0, |d| d.len());
        let mut w = CMatrix::zeros(n, directions.len());
        for (j, (d, &p)) in directions.iter().zip(powers).enumerate() {
            w.set_column(j, &(d * crate::C64::from(p.max(0.0).sqrt())));
        }
        FdPrecoder { w }
    }

    pub fn n_antennas(&self) -> usize {
        self.w.nrows()
    }

    pub fn groups(&self) -> usize {
        self.w.ncols()
    }

    pub fn column(&self, j: usize) -> CVector {
        self.w.column(j).into_owned()
    }

    /// `Σ_j ‖w_j‖²`, the squared Frobenius norm.
    pub fn power(&self) -> f64 {
        frobenius_sq(&self.w)
    }
}

pub(crate) fn check_dims(channels: &ChannelSet, w: &FdPrecoder) -> Result<()> {
    if w.n_antennas() != channels.n_antennas() || w.groups() != channels.groups() {
        return Err(Error::DimensionMismatch(format!(
            "precoder is {}x{}, channels need {}x{}",
            w.n_antennas(),
            w.groups(),
            channels.n_antennas(),
            channels.groups()
        )));
    }
    Ok(())
}

/// `|h_jk^H w_j|² / (Σ_{i≠j} |h_jk^H w_i|² + σ²)`.
pub fn sinr(channels: &ChannelSet, w: &FdPrecoder, group: usize, ue: usize, noise_power: f64) -> Result<f64> {
    check_dims(channels, w)?;
    if group >= channels.groups() || ue >= channels.channels[group].len() {
        return Err(Error::DimensionMismatch(format!("no UE ({group}, {ue})")));
    }
    Ok(sinr_unchecked(channels.get(group, ue), w, group, noise_power))
}

pub(crate) fn sinr_unchecked(h: &CVector, w: &FdPrecoder, group: usize, noise_power: f64) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for i in 0..w.groups() {
        let g = w.w.column(i).iter().zip(h.iter()).map(|(x, hh)| hh.conj() * x).sum::<crate::C64>().norm_sqr();
        if i == group {
            signal = g;
        } else {
            interference += g;
        }
    }
    signal / (interference + noise_power)
}

pub(crate) fn beam_gain(h: &CVector, d: &CVector) -> f64 {
    inner(h, d).norm_sqr()
}
