//! Unified six-parameter matrix model of windowed OFDM.
//!
//! The crate covers CP-OFDM and six windowed variants (wtx, wrx, WOLA, CPW,
//! CPwtx, CPwrx) with one formulation:
//!
//! * [`sysparams`]: the six integers `(μ, β, δ, ρ, γ, κ)` plus `N`, presets and checks.
//! * [`windowing`]: Tx/Rx tapering windows.
//! * [`engine`]: the matrices `W, Γ, R, P, K, H⁽ᵐ⁾` and the equivalent channel `{A_m}`.
//! * [`channels`]: fixture channels, ITU Pedestrian A / Vehicular A ensembles, AWGN.
//! * [`analysis`]: signal, ICI₁, ICI₂, ISI and noise powers, SINR and achievable rate.
//! * [`link_sim`]: a sample-level Monte Carlo link that cross-checks the closed forms.
//! * [`cli`]: the `wofdm` command-line front end.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod analysis;
pub mod channels;
pub mod cli;
pub mod dft;
pub mod engine;
pub mod error;
pub mod link_sim;
pub mod qfunc;
pub mod report;
pub mod rng;
pub mod sysparams;
pub mod windowing;

pub use num_complex::Complex64;

pub use analysis::{InterferenceReport, RateParams};
pub use channels::{ChannelEnsembleSpec, ChannelModel, Cir};
pub use engine::EquivalentChannel;
pub use error::{Error, Result};
pub use sysparams::{SystemKind, SystemParams};
pub use windowing::WindowPair;
