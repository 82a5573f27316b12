//! Trust sensing from EEG/GSR feature data.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`signal`] — synthetic EEG/GSR recordings and the fixed 200-entry
//!   feature schema extracted from them;
//! - [`dataset`] — CSV ingestion, standardization, class balancing and
//!   subject-wise / k-fold splitting;
//! - [`mlp`] — from-scratch multilayer perceptrons trained with binary
//!   cross-entropy under adam or rmsprop;
//! - [`rfe`] — recursive feature elimination over a linear estimator;
//! - [`lime`] — local surrogate explanations of any probability model;
//! - [`eval`] — confusion-matrix metrics and cross-validated reports.
//!
//! All randomness is seeded; identical seeds reproduce identical runs.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod lime;
mod linalg;
pub mod mlp;
pub mod rfe;
pub mod seeding;
pub mod signal;

pub use error::{Error, Result};
