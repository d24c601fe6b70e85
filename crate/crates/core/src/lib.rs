//! Bayesian posterior of mutual information between two categorical
//! variables under Dirichlet priors, and robust feature selection built on it.
//!
//! The crate is organised bottom-up:
//!
//! - [`tables`]: contingency tables, priors, prior-augmented counts
//! - [`info`]: empirical mutual information, its upper bound, digamma
//! - [`moments`]: exact posterior mean and approximate variance
//! - [`missing`]: leading-order moments for partially observed pairs
//! - [`dist`]: moment-matched Normal/Gamma/Beta approximations
//! - [`oracle`]: Monte Carlo sampler of the exact posterior of I
//! - [`filters`]: the empirical (F), forward (FF) and backward (BF) filters
//! - [`naive_bayes`]: incremental add-one naive Bayes
//! - [`harness`]: datasets, the incremental experiment, t-tests, reports
//!
//! All logarithms are natural; information is measured in nats.

pub mod dist;
pub mod error;
pub mod filters;
pub mod harness;
pub mod info;
pub mod missing;
pub mod moments;
pub mod naive_bayes;
pub mod oracle;
mod special;
pub mod tables;

pub use error::{Error, Result};
