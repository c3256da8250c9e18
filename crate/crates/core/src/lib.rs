//! Multi-group multicast precoding.
//!
//! The crate covers the full pipeline used to study hybrid analog/digital
//! precoders for physical-layer multicasting:
//!
//! - [`channel`]: geometric mmWave channels over a uniform linear array.
//! - [`fd`]: fully-digital QoS and max-min-fair precoder design by
//!   semidefinite relaxation, Gaussian randomization and power control.
//! - [`sdp`]: the first-order conic solver behind the relaxation.
//! - [`hybrid`]: exact factorization of any fully-digital precoder into two
//!   phase-shifter banks and a diagonal digital stage, plus finite-resolution
//!   phase quantization.
//! - [`evaluation`]: SINR, power and performance-ratio metrics.
//! - [`experiment`]: seeded Monte Carlo campaigns, CSV output and reports.
//! - [`io`]: text formats for channel sets, precoders and hybrid precoders.

pub mod channel;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod fd;
pub mod hybrid;
pub mod io;
pub mod linalg;
pub mod sdp;

pub use channel::{array_response, generate_channels, ChannelSet, SystemConfig};
pub use error::{Error, Result};
pub use evaluation::{min_sinr, performance_ratio, total_power, Metric, PrecoderKind, Problem, ResultRecord};
pub use fd::{sinr, FdPrecoder};
pub use hybrid::{
    decompose, quantize_phases, DecomposeOptions, HybridPrecoder, PhaseFamily, Resolution, RhoMode,
};
pub use linalg::{CMatrix, CVector, C64};
