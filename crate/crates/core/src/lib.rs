//! Fidelity benchmark for interpretable explanations of an epsilon-SVR black box.
//!
//! The crate trains a support-vector regressor on tabular data, fits three
//! explainers to its outputs (a CART regression tree, ordinary multi-linear
//! regression and LIME), and scores how faithfully each one reproduces the
//! black box:
//!
//! * [`metrics`] computes global fidelity RMSEs and per-record win counts,
//! * [`wilcoxon`] provides the paired signed-rank test used for every
//!   cross-technique comparison,
//! * [`experiment`] wires the pieces into seeded multi-run suites and can
//!   replay published result tables without fitting anything.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod error;
pub mod experiment;
pub mod lime;
pub mod manifest;
pub mod metrics;
pub mod rng;
pub mod surrogates;
pub mod svr;
pub mod wilcoxon;

pub use error::{Error, Result};
