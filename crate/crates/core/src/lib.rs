//! Numerical laboratory for reflecting-surface-enabled NLoS sensing and ISAC.
//!
//! The crate covers the full chain from channel synthesis to system-level
//! experiments:
//!
//! * [`model`] — scenario types, ULA steering, path loss, LoS/Rician channel
//!   synthesis, rank-1 point-target responses;
//! * [`specfun`] — Marcum Q and noncentral chi-square survival/inverse kernels;
//! * [`snr`] — closed-form sensing SNR for the fully-passive, semi-passive,
//!   and active architectures plus active-surface power accounting;
//! * [`detection`] — GLRT/NP detectors, closed-form detection probabilities,
//!   and Monte-Carlo validation of the closed forms;
//! * [`estimation`] — Fisher information, closed-form angle CRBs, a
//!   finite-difference FIM oracle, and the grid MLE;
//! * [`beamforming`] — closed-form LoS detection optima and alternating
//!   projected-gradient CRB minimization;
//! * [`isac`] — joint information + sensing transmit model, type-I/II
//!   receiver SNRs, and the SNR-vs-CRB Pareto sweep;
//! * [`harness`] — config parsing, presets, counter-based RNG streams, and
//!   deterministic CSV emission.

pub mod beamforming;
pub mod cascade;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod isac;
pub mod model;
pub mod snr;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{
    Architecture, ChannelSet, Geometry, PathLossModel, ReflectPattern, SystemConfig,
    TargetResponse, TransmitCovariance, C64, CMat, CVec,
};
