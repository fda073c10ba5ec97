//! Counting statistics and receiver design for dead-time limited
//! photon-counting receivers.
//!
//! The crate is `no_std` (it needs `alloc`). Float math comes from
//! `num_traits::Float` backed by `libm`; whenever std is linked into the build
//! its inherent `f64` methods take precedence, so those imports carry
//! `allow(unused_imports)`. Everything here is pure and
//! deterministic; the Monte Carlo driver, file formats and command line live in
//! the `photocount` crate.
//!
//! Units are normalized: the symbol lasts 1, a pulse has mean height 1, and the
//! sampling period `T`, holding time `tau` and threshold `xi` are expressed in
//! those units.

#![no_std]
#![forbid(unsafe_code)]
// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod design;
pub mod detector;
pub mod error;
pub mod mc;
pub mod moments;
pub mod params;
pub mod stats;
pub mod subpoisson;
pub mod waveform;

pub use error::{Error, Result};
pub use params::{derive_params, gaussian_q, ChannelParams, DerivedParams, ReceiverConfig, Regime};
