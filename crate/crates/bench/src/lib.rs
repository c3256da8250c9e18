//! Shared fixtures for the benchmarks.

use mhp_core::fd::{build_qos_sdr, LinkGains, QosSdr, Targets};
use mhp_core::{generate_channels, CMatrix, ChannelSet, FdPrecoder, SystemConfig, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_precoder(n: usize, g: usize, seed: u64) -> FdPrecoder {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    FdPrecoder::new(CMatrix::from_fn(n, g, |_, _| C64::new(draw(), draw())))
}

pub fn channels(n: usize, group_sizes: &[usize], seed: u64) -> ChannelSet {
    let cfg = SystemConfig::new(n, group_sizes.to_vec(), 3).expect("valid config");
    generate_channels(&cfg, seed).expect("valid channels")
}

/// QoS relaxation of a uniform-target instance.
pub fn qos_relaxation(n: usize, group_sizes: &[usize], gamma: f64, seed: u64) -> QosSdr {
    let ch = channels(n, group_sizes, seed);
    build_qos_sdr(&ch, &Targets::uniform(&ch, gamma), 1.0, None).expect("valid relaxation")
}

/// Link gains of matched-filter-like beams (each group's first UE).
pub fn matched_gains(ch: &ChannelSet) -> LinkGains {
    let dirs: Vec<_> = ch.channels.iter().map(|g| g[0].normalize()).collect();
    LinkGains::from_directions(ch, &dirs)
}
