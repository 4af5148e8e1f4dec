//! Calibration assessment for multivariate ensemble forecasts.
//!
//! An ensemble forecast of a `d`-dimensional quantity is calibrated when the
//! observation is statistically indistinguishable from the members. This
//! crate assesses that property through rank histograms: each verification
//! case (members plus observation) is reduced to scalars by a pre-rank
//! function, the observation's pre-rank is ranked within the set with ties
//! resolved at random, and the ranks are aggregated over many cases. A flat
//! histogram indicates calibration; systematic shapes reveal bias,
//! dispersion errors or misspecified dependence.
//!
//! The crate provides:
//!
//! - four pre-rank functions (multivariate dominance count, band depth,
//!   average rank, minimum spanning tree length) in [`prerank`];
//! - Gaussian scenario generators for dimensionality and dependence
//!   experiments in [`simulate`];
//! - closed-form expectations, variances and covariances of the pre-ranks in
//!   an analytically tractable dependence regime in [`oracle`];
//! - a statistical postprocessing pipeline (per-lead-time bias correction and
//!   error dressing with three dependence strategies) in [`postprocess`];
//! - reference experiment suites with frozen tolerances in [`verify`].
//!
//! All randomness flows through [`rng::RandomSource`], which derives
//! independent keyed substreams so results are reproducible bit for bit
//! regardless of scheduling or worker count.

pub mod case;
pub mod error;
pub mod histogram;
pub mod mst;
pub mod oracle;
pub mod postprocess;
pub mod prerank;
pub mod ranking;
pub mod rng;
pub mod simulate;
pub mod verify;

pub use case::{CaseId, ForecastCase, PreRankVector};
pub use error::{Error, Result};
pub use histogram::{accumulate_histogram, HistogramSummary, RankHistogram};
pub use prerank::PreRankMethod;
pub use ranking::{rank_case, rank_of_element, rank_of_observation, rank_within};
pub use rng::{RandomSource, StreamPurpose};
