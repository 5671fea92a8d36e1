//! Leave-one-out kernel-smoothed Monte Carlo.
//!
//! Replacing the known sampling density in a Monte Carlo average by its
//! leave-one-out kernel estimate makes the integral estimator converge
//! faster than `n^{-1/2}`. The same device gives root-`n` estimators of
//! linear functionals of a regression function, and from there an
//! average-derivative estimator of the index space of a multiple-index
//! model that uses compactly supported test functions instead of the
//! density gradient.
//!
//! Modules:
//!
//! - [`kernels`]: kernel families and bandwidth rules
//! - [`density`]: leave-one-out density and variance tables
//! - [`integrator`]: smoothed, corrected and plain Monte Carlo integrals
//! - [`regfun`]: linear functionals of a regression and CLT checks
//! - [`indexspace`]: test-function average derivatives, ADE and projector error
//! - [`inverse_regression`]: SIR and SAVE baselines
//! - [`simbench`]: model generators and the seeded replication harness
//! - [`io`] and [`cli`]: dataset CSV and the command-line driver

pub mod cli;
pub mod density;
pub mod error;
pub mod indexspace;
pub mod integrator;
pub mod inverse_regression;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod regfun;
pub mod rng;
pub mod sample;
pub mod simbench;
pub mod stats;

pub use density::{FloorPolicy, LooDensityTable};
pub use error::{Error, Result};
pub use integrator::{BoxRegion, EstimatorKind, IntegralEstimate, Integrand};
pub use kernels::{Bandwidth, KernelFamily, KernelSpec};
pub use linalg::SubspaceEstimate;
pub use sample::Sample;
