//! Link-level simulation of RIS-assisted generalized receive quadrature
//! spatial modulation (RIS-GRQSM).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: Rayleigh channels, effective RIS-assisted coefficients and
//!   noisy received-signal synthesis.
//! * [`index`]: combination ranking and the bits ↔ spatial-symbol codebook.
//! * [`optimizer`]: max-min RIS phase design through the Lagrange dual, the
//!   KKT Newton path, the closed-form sub-optimal rule and the multicast
//!   variant.
//! * [`transceiver`]: transmit chain, greedy detector, multicast ML
//!   detectors and the RIS-partitioning benchmark.
//! * [`oracle`]: brute-force references (phase grid search, exhaustive
//!   detection).
//! * [`sim`]: Monte-Carlo BER sweeps, multiplier statistics, runtime
//!   benchmarks and result files.

pub mod error;
pub mod index;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod sim;
pub mod transceiver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
