//! Descriptive binary linear discriminant analysis for matrix-variate data
//! under a separable (Kronecker) covariance model.
//!
//! Observations are K x J matrices in two classes. The within-class
//! covariance of the row-major vectorization is modeled as the Kronecker
//! product of a K x K row factor and a J x J column factor, estimated by the
//! alternating flip-flop algorithm. The most discriminant row and column
//! combinations are the singular vectors of the class-mean difference under
//! the Mahalanobis metrics given by the inverse factors; projections, the
//! eigenvalue decomposition of the Mahalanobis distance, and low-rank
//! approximation errors all follow from that decomposition.
//!
//! A discrete wavelet front-end summarizes long time courses into a small
//! number of coefficient rows before estimation, and synthesizes discriminant
//! components back to the time domain.

pub mod covariance;
pub mod discriminant;
pub mod error;
pub mod io;
pub mod metric;
pub mod synth;
pub mod wavelet;

pub use error::{Error, ErrorCategory, FactorSide, Result};
