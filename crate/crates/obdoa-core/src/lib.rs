//! One-bit direction-of-arrival estimation on sparse cross-dipole arrays.
//!
//! The library covers the full pipeline from a polarized electromagnetic
//! source model to DOA estimates and error bounds:
//!
//! - [`geometry`]: sparse array layouts (ULA, nested, coprime, custom), their
//!   difference coarrays and lag-averaging maps.
//! - [`signal`]: polarized source covariances and cross-dipole snapshot
//!   generation under a circular complex Gaussian model.
//! - [`quantize`]: one-bit complex quantization, sample covariances, and
//!   arcsine-law reconstruction of normalized covariances.
//! - [`estimator`]: coarray covariance assembly, MUSIC spectra, root-MUSIC,
//!   and the one-bit MUSIC pipelines (single-axis and summed).
//! - [`crb`]: Fisher information and Cramer-Rao bounds for one-bit and
//!   unquantized measurements.
//! - [`harness`]: scenario/experiment configs and a deterministic Monte Carlo
//!   runner with CSV/JSON output.
//!
//! Numerical code is generic over the scalar type through [`scalar::Scalar`]
//! (`f32` or `f64`); concrete `f64` aliases are exported at the crate root.

pub mod crb;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod quantize;
pub mod scalar;
pub mod signal;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Complex scalar used by the `f64` aliases below.
pub type C64 = num_complex::Complex<f64>;

pub type SourceSpec64 = signal::SourceSpec<f64>;
pub type SourceCovariance64 = signal::SourceCovariance<f64>;
pub type Scenario64 = signal::Scenario<f64>;
pub type SnapshotMatrix64 = signal::SnapshotMatrix<f64>;
pub type NormalizedCovariance64 = quantize::NormalizedCovariance<f64>;
pub type CoarrayMeasurement64 = estimator::CoarrayMeasurement<f64>;
pub type CoarrayCovariance64 = estimator::CoarrayCovariance<f64>;
pub type DoaEstimate64 = estimator::DoaEstimate<f64>;
pub type CrbParams64 = crb::CrbParams<f64>;
pub type FisherInfo64 = crb::FisherInfo<f64>;
