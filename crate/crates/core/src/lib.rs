//! Pulse-train modulation over a laser-induced vapor cloud, and the
//! underwater acoustic link that carries it.
//!
//! - [`codec`]: OOK, PPM, DPPM, IDPPM and VCD-DPPM slot streams, text mapping
//! - [`cloud`]: leaky-bucket vapor-cloud model and sustainable pulse rates
//! - [`rates`]: bit rates, rate limits and power efficiency per scheme
//! - [`channel`]: absorption, spreading, ambient noise and slot SNR
//! - [`linksim`]: Monte Carlo BER and text throughput
//! - [`cli`]: the `optosim` command line

pub mod channel;
pub mod cli;
pub mod cloud;
pub mod codec;
pub mod linksim;
pub mod output;
pub mod rates;

pub use channel::ChannelParams;
pub use cloud::CloudParams;
pub use codec::{Scheme, SchemeSpec, SlotStream};
pub use linksim::ExperimentConfig;
