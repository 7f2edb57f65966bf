//! Differentially private convex optimization toolkit.
//!
//! The crate implements second-order DP optimizers — a double-noise Newton
//! method for logistic regression (with eigenvalue clipping/adding and an
//! adaptive spectral floor), a cubic-regularized DP Newton method for
//! strongly convex losses, and a DP accelerated Nesterov method — together
//! with first-order baselines (DP-GD, DP-SGD, DP-GD-Oracle, damped Newton),
//! a zCDP privacy accountant with a subsampled-Gaussian noise calibrator,
//! LIBSVM ingestion, a synthetic data generator, and a benchmark harness.
//!
//! Entry points:
//! - [`newton::dn_newton_run`] — double-noise Newton (Hess/QU × clip/add).
//! - [`cubic::cubic_meta_run`] — cubic-regularized DP Newton.
//! - [`cubic::nesterov_dp_run`] — DP accelerated Nesterov.
//! - [`baselines`] — first-order and damped-Newton comparators.
//! - [`bench`] — experiment sweeps, reference optima, CSV reports.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod baselines;
pub mod bench;
pub mod cubic;
pub mod datasets;
pub mod error;
pub mod losses;
pub mod newton;
pub mod numkit;
pub mod privacy;
pub mod spectra;
pub mod trace;

pub use error::{Error, Result};
