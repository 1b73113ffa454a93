//! Multi-target linear shrinkage estimation of covariance matrices.
//!
//! The target-averaged shrinkage (TAS) estimator places an inverse-Wishart
//! prior on the covariance, a uniform discrete prior on the shrinkage
//! intensity and a uniform prior over a set of candidate targets. The
//! posterior mean is a convex combination of the targets and the sample
//! covariance, with weights obtained in closed form from `K x L` marginal
//! likelihood evaluations.
//!
//! ```
//! use tas_core::{build_default_target_set, fit_tas, sample_covariance, AlphaGrid, DataMatrix};
//!
//! let x = DataMatrix::from_samples(&[
//!     vec![0.3, 1.2, -0.4],
//!     vec![-1.1, 0.1, 0.9],
//!     vec![0.7, -0.8, 0.2],
//!     vec![0.2, 0.5, -1.3],
//! ])?;
//! let s = sample_covariance(&x, true)?;
//! let targets = build_default_target_set(&s.matrix)?;
//! let est = fit_tas(&s.matrix, s.n, &AlphaGrid::default(), &targets.set)?;
//! let total: f64 = est.target_weights.iter().sum::<f64>() + est.sample_weight;
//! assert!((total - 1.0).abs() < 1e-12);
//! # Ok::<(), tas_core::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linalg;
pub mod simulation;
pub mod targets;

pub use data::{sample_covariance, DataMatrix, SampleCovariance};
pub use error::{Error, Result};
pub use estimator::{
    bayes_factor_curve, empirical_bayes_alpha, fit_tas, log_marginal_likelihood, model_average, posterior_grid,
    posterior_grid_with_priors, reparametrise, sts_estimate, tas_estimate, AlphaGrid, BayesFactorPoint, IwParams,
    PosteriorTable, TasEstimate,
};
pub use linalg::{cholesky, frobenius_dist_sq, log_det, log_sum_exp, mv_log_gamma, sym_eigenvalues, CholeskyFactor, SymMatrix};
pub use targets::{
    build_default_target_set, build_target, build_target_set, external_target, target_distance_matrix, Provenance,
    ShrinkageTarget, TargetKind, TargetSet,
};

/// Crate version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
