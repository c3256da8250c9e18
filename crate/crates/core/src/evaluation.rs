//! Performance metrics and result records.

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::fd::{check_dims, sinr_unchecked, FdPrecoder};
use crate::hybrid::Resolution;

/// Smallest SINR over every UE of every group.
pub fn min_sinr(channels: &ChannelSet, w: &FdPrecoder, noise_power: f64) -> Result<f64> {
    check_dims(channels, w)?;
    Ok(channels
        .iter()
        .map(|(j, _, h)| sinr_unchecked(h, w, j, noise_power))
        .fold(f64::INFINITY, f64::min))
}

pub fn total_power(w: &FdPrecoder) -> f64 {
    w.power()
}

/// `value / fd_value`; `None` when the baseline is not positive.
pub fn performance_ratio(value: f64, fd_value: f64) -> Option<f64> {
    if fd_value > 0.0 && fd_value.is_finite() {
        Some(value / fd_value)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    Qos,
    Mmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrecoderKind {
    Fd,
    Hybrid,
    HybridQuantized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    MinSinr,
    TotalPowerWatts,
    RatioToFd,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let s = s.trim();
                $(if s.eq_ignore_ascii_case($text) { return Ok($ty::$variant); })+
                Err(Error::InvalidConfig(format!(concat!("unknown ", stringify!($ty), " `{}`"), s)))
            }
        }
    };
}

text_enum!(Problem { Qos => "QoS", Mmf => "MMF" });
text_enum!(PrecoderKind { Fd => "FD", Hybrid => "Hybrid", HybridQuantized => "HybridQuantized" });
text_enum!(Metric { MinSinr => "min_sinr", TotalPowerWatts => "total_power_watts", RatioToFd => "ratio_to_fd" });

/// One CSV row of campaign output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub seed: u64,
    pub n_antennas: usize,
    pub groups: usize,
    pub total_k: usize,
    pub n_paths: usize,
    pub bits: Resolution,
    pub problem: Problem,
    pub precoder_kind: PrecoderKind,
    pub metric: Metric,
    pub value: f64,
    pub infeasible: bool,
}

impl ResultRecord {
    /// Sort key: `(N, seed, precoder_kind, bits, metric_name)`.
    pub fn sort_key(&self) -> (usize, u64, PrecoderKind, Resolution, Metric) {
        (self.n_antennas, self.seed, self.precoder_kind, self.bits, self.metric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, SystemConfig};
    use crate::linalg::{CMatrix, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_w(rng: &mut ChaCha8Rng, n: usize, g: usize) -> FdPrecoder {
        FdPrecoder::new(CMatrix::from_fn(n, g, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
    }

    #[test]
    fn min_sinr_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SystemConfig::new(6, vec![3, 2], 3).unwrap();
        for seed in 0..10 {
            let ch = generate_channels(&cfg, seed).unwrap();
            let w = random_w(&mut rng, 6, 2);
            let mut naive = f64::INFINITY;
            for j in 0..2 {
                for k in 0..cfg.group_sizes[j] {
                    let h = ch.get(j, k);
                    let mut sig = 0.0;
                    let mut int = 0.0;
                    for i in 0..2 {
                        let mut acc = C64::new(0.0, 0.0);
                        for n in 0..6 {
                            acc += h[n].conj() * w.w[(n, i)];
                        }
                        if i == j {
                            sig = acc.norm_sqr();
                        } else {
                            int += acc.norm_sqr();
                        }
                    }
                    naive = naive.min(sig / (int + 1.0));
                }
            }
            let got = min_sinr(&ch, &w, 1.0).unwrap();
            assert!((got - naive).abs() <= 1e-12 * naive.max(1.0));
        }
    }

    #[test]
    fn single_ue_min_is_its_sinr() {
        let cfg = SystemConfig::new(3, vec![1], 2).unwrap();
        let ch = generate_channels(&cfg, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_w(&mut rng, 3, 1);
        let s = crate::fd::sinr(&ch, &w, 0, 0, 1.0).unwrap();
        assert_eq!(min_sinr(&ch, &w, 1.0).unwrap(), s);
    }

    #[test]
    fn adding_a_ue_never_raises_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let big = generate_channels(&SystemConfig::new(4, vec![5], 3).unwrap(), 1).unwrap();
        let w = random_w(&mut rng, 4, 1);
        for k in 1..5 {
            let sub = ChannelSet::from_vectors(
                SystemConfig::new(4, vec![k], 3).unwrap(),
                1,
                vec![big.channels[0][..k].to_vec()],
            )
            .unwrap();
            let sup = ChannelSet::from_vectors(
                SystemConfig::new(4, vec![k + 1], 3).unwrap(),
                1,
                vec![big.channels[0][..=k].to_vec()],
            )
            .unwrap();
            assert!(min_sinr(&sup, &w, 1.0).unwrap() <= min_sinr(&sub, &w, 1.0).unwrap());
        }
    }

    #[test]
    fn power_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_w(&mut rng, 4, 2);
        assert!((total_power(&FdPrecoder::new(CMatrix::from_element(1, 1, C64::from(10f64.sqrt())))) - 10.0).abs() < 1e-12);
        // Q from the QR factorization of a random matrix
        let q = random_w(&mut rng, 4, 4).w.qr().q();
        let rotated = FdPrecoder::new(&q * &w.w);
        assert!((total_power(&rotated) - total_power(&w)).abs() < 1e-12);
    }

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(performance_ratio(3.0, 3.0), Some(1.0));
        assert_eq!(performance_ratio(0.0, 3.0), Some(0.0));
        assert_eq!(performance_ratio(1.0, 0.0), None);
    }

    #[test]
    fn enum_text_roundtrip() {
        for m in [Metric::MinSinr, Metric::TotalPowerWatts, Metric::RatioToFd] {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        assert_eq!("mmf".parse::<Problem>().unwrap(), Problem::Mmf);
        assert!("bogus".parse::<PrecoderKind>().is_err());
    }
}
