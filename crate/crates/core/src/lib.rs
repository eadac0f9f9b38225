//! Semi-supervised two-class normal discriminant analysis with an informative
//! missing-label mechanism.
//!
//! The crate covers the canonical homoscedastic model and its Bayes rule,
//! logistic selection models for missing labels, the complete, ignore and full
//! log-likelihoods with analytic gradients, exact Fisher information about the
//! discriminant coefficients, asymptotic relative efficiencies of the
//! resulting plug-in rules, maximum-likelihood fitting, and a reproducible
//! Monte Carlo harness.

// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod efficiency;
pub mod error;
pub mod estimation;
pub mod information;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod missingness;
pub mod model;
pub mod montecarlo;
pub mod optim;
pub mod quadrature;
pub mod special;
pub mod unconstrained;

pub use efficiency::{
    are_full, are_full_general, are_ignore_mcar, excess_error_coeff, mcar_grid, prior_sensitivity,
    table_grid, AREResult, GridCell, GridSpec, McarCell, McarGridSpec, PriorSensitivity,
};
pub use error::{Error, Result};
pub use estimation::{fit_complete, fit_full, fit_ignore, FitConfig, FitResult};
pub use information::{
    info_cc_beta, info_clr_beta, info_full_beta, info_ig_beta, info_miss_beta, info_miss_blocks,
    InfoBlocks, InfoMatrix,
};
pub use io::{read_dataset, read_dataset_file, write_dataset};
pub use likelihood::{
    grad_loglik, loglik_and_grad, loglik_complete, loglik_full, loglik_ignore, loglik_miss,
    loglik_unconstrained, Dataset, LikelihoodKind, LogLikValue, Record,
};
pub use missingness::{gamma, q_prob, FullParams, Mechanism, MissParams};
pub use model::{
    beta_from_theta, canonical_theta, conditional_error, optimal_error, CanonicalModel, ClassLabel,
    DiscriminantCoeffs, ThetaParams,
};
pub use montecarlo::{
    bootstrap_se, gen_dataset, relative_efficiency, run_replications, DatasetTruth, GeneratedData,
    ReplicateOutcome, SimConfig, SimResult,
};
pub use quadrature::mixture_expectation;
pub use unconstrained::UnconstrainedVector;
