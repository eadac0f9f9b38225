//! Maximum-likelihood fitting of the mixture and selection parameters.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::likelihood::{loglik_and_grad, Dataset, LikelihoodKind};
use crate::missingness::{FullParams, Mechanism, MissParams};
use crate::model::{beta_from_theta, ClassLabel, DiscriminantCoeffs, ThetaParams};
use crate::optim::{minimize, BfgsOptions};
use crate::special::logit;

pub use crate::unconstrained::UnconstrainedVector;

/// Bound on the starting selection intercept.
const XI0_START_BOUND: f64 = 5.0;
/// Relative size of the perturbation applied to the start of each restart.
const RESTART_JITTER: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Tolerance on the sup-norm of the per-record gradient.
    pub grad_tol: f64,
    /// Jittered restarts attempted when a fit does not converge.
    pub restarts: usize,
    pub seed: u64,
    pub mechanism: Mechanism,
    /// Holds `ξ₁` at this value instead of estimating it.
    pub fixed_xi1: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            restarts: 3,
            seed: 0,
            mechanism: Mechanism::DiscriminantSquare,
            fixed_xi1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: ThetaParams,
    /// Present for full-likelihood fits.
    pub xi_hat: Option<MissParams>,
    pub mechanism: Mechanism,
    /// Maximized log-likelihood (total, not per record).
    pub loglik: f64,
    /// Quasi-Newton iterations over all attempts.
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the per-record gradient at the returned point.
    pub gradient_norm: f64,
    /// Restarts used after the first attempt.
    pub restarts: usize,
    pub psi_hat: UnconstrainedVector,
}

impl FitResult {
    pub fn beta_hat(&self) -> Result<DiscriminantCoeffs> {
        beta_from_theta(&self.theta_hat)
    }

    pub fn full_params(&self) -> Option<FullParams> {
        self.xi_hat
            .map(|xi| FullParams::new(self.theta_hat.clone(), xi, self.mechanism))
    }
}

fn class_means(data: &Dataset) -> Result<(usize, DVector<f64>, usize, DVector<f64>)> {
    let p = data.p();
    let (mut n1, mut n2) = (0usize, 0usize);
    let mut s1 = DVector::zeros(p);
    let mut s2 = DVector::zeros(p);
    for (i, r) in data.records().iter().enumerate() {
        let y = DVector::from_column_slice(&r.y);
        match r.label {
            Some(ClassLabel::One) => {
                n1 += 1;
                s1 += y;
            }
            Some(ClassLabel::Two) => {
                n2 += 1;
                s2 += y;
            }
            None => return Err(Error::UnlabeledRecord(i)),
        }
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::Dataset(format!(
            "both classes need at least one record (got {n1} and {n2})"
        )));
    }
    Ok((n1, s1 / n1 as f64, n2, s2 / n2 as f64))
}

/// Closed-form maximum-likelihood estimate from a completely classified
/// sample: class proportions, class means and the pooled within-class
/// covariance with divisor `n`.
pub fn fit_complete(data: &Dataset) -> Result<ThetaParams> {
    let p = data.p();
    if data.n() <= p + 2 {
        return Err(Error::Dataset(format!(
            "need more than {} records to estimate a {p}-dimensional model, got {}",
            p + 2,
            data.n()
        )));
    }
    let (n1, mu1, _, mu2) = class_means(data)?;
    let mut scatter = DMatrix::zeros(p, p);
    for r in data.records() {
        let y = DVector::from_column_slice(&r.y);
        let c = if r.label == Some(ClassLabel::One) {
            &y - &mu1
        } else {
            &y - &mu2
        };
        scatter += &c * c.transpose();
    }
    let n = data.n() as f64;
    ThetaParams::new(n1 as f64 / n, mu1, mu2, scatter / n)
}

/// Starting mixture parameters: the complete-data estimate from the labeled
/// records when both classes are present, otherwise a split of the pooled
/// sample along its leading principal axis.
pub fn default_theta_start(data: &Dataset) -> Result<ThetaParams> {
    if let Ok(theta) = fit_complete(&data.labeled_subset()) {
        return Ok(theta);
    }
    let p = data.p();
    if data.n() <= p + 1 {
        return Err(Error::Dataset("too few records to start a fit".into()));
    }
    let n = data.n() as f64;
    let mut mean = DVector::zeros(p);
    for r in data.records() {
        mean += DVector::from_column_slice(&r.y);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(p, p);
    for r in data.records() {
        let c = DVector::from_column_slice(&r.y) - &mean;
        cov += &c * c.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov.clone());
    let k = eig.eigenvalues.imax();
    let axis = eig.eigenvectors.column(k) * eig.eigenvalues[k].max(0.0).sqrt();
    ThetaParams::new(0.5, &mean + &axis, &mean - &axis, cov)
}

/// Starting selection parameters: `ξ₀ = logit(m̄)` clipped to `±5` and a
/// unit slope pointing towards more missing labels near the boundary.
pub fn default_xi_start(data: &Dataset, mechanism: Mechanism) -> MissParams {
    let m = data.missing_fraction();
    let xi0 = logit(m).clamp(-XI0_START_BOUND, XI0_START_BOUND);
    let xi1 = match mechanism {
        Mechanism::DiscriminantSquare => -1.0,
        Mechanism::Entropy => 1.0,
        Mechanism::Mcar => 0.0,
    };
    MissParams { xi0, xi1 }
}

fn fit_generic(
    data: &Dataset,
    start: UnconstrainedVector,
    kind: LikelihoodKind,
    config: &FitConfig,
    fixed: Option<(usize, f64)>,
) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::Dataset("cannot fit an empty dataset".into()));
    }
    let n = data.n() as f64;
    let free: Vec<usize> = (0..start.len())
        .filter(|&i| fixed.is_none_or(|(k, _)| k != i))
        .collect();
    let mut full = start.values().to_vec();
    if let Some((k, v)) = fixed {
        full[k] = v;
    }
    let base = full.clone();
    let expand = |x: &[f64]| {
        let mut v = base.clone();
        for (&i, &xi) in free.iter().zip(x) {
            v[i] = xi;
        }
        v
    };
    let objective = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        let psi = start.with_values(expand(x)).ok()?;
        let (ll, g) = loglik_and_grad(&psi, data, kind, config.mechanism).ok()?;
        Some((-ll / n, free.iter().map(|&i| -g[i] / n).collect()))
    };
    let opts = BfgsOptions {
        max_iter: config.max_iter,
        grad_tol: config.grad_tol,
        ..BfgsOptions::default()
    };

    let x0: Vec<f64> = free.iter().map(|&i| full[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best = minimize(objective, &x0, &opts).ok_or(Error::NonFiniteLikelihood)?;
    let mut iterations = best.iterations;
    let mut restarts = 0;
    while !best.converged && restarts < config.restarts {
        restarts += 1;
        let jittered: Vec<f64> = x0
            .iter()
            .map(|&v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + RESTART_JITTER * (1.0 + v.abs()) * z
            })
            .collect();
        if let Some(out) = minimize(objective, &jittered, &opts) {
            iterations += out.iterations;
            let better = (out.converged && !best.converged)
                || (out.converged == best.converged && out.value < best.value);
            if better {
                best = out;
            }
        }
    }

    let psi_hat = start.with_values(expand(&best.x))?;
    let theta_hat = psi_hat.to_theta()?;
    let xi_hat = match kind {
        LikelihoodKind::Ignore => None,
        _ => psi_hat.xi(),
    };
    Ok(FitResult {
        theta_hat,
        xi_hat,
        mechanism: config.mechanism,
        loglik: -best.value * n,
        iterations,
        converged: best.converged,
        gradient_norm: best.gradient_norm(),
        restarts,
        psi_hat,
    })
}

/// Maximizes the likelihood that ignores the missing-label mechanism.
pub fn fit_ignore(
    data: &Dataset,
    init: Option<&ThetaParams>,
    config: &FitConfig,
) -> Result<FitResult> {
    let theta0 = match init {
        Some(t) => t.clone(),
        None => default_theta_start(data)?,
    };
    let start = UnconstrainedVector::from_theta(&theta0, None)?;
    fit_generic(data, start, LikelihoodKind::Ignore, config, None)
}

/// Maximizes the full likelihood over the mixture and selection parameters.
pub fn fit_full(
    data: &Dataset,
    init: Option<&FullParams>,
    config: &FitConfig,
) -> Result<FitResult> {
    let (theta0, mut xi0) = match init {
        Some(psi) => (psi.theta.clone(), psi.xi),
        None => (
            default_theta_start(data)?,
            default_xi_start(data, config.mechanism),
        ),
    };
    let fixed_value = match (config.mechanism, config.fixed_xi1) {
        (_, Some(v)) => Some(v),
        (Mechanism::Mcar, None) => Some(0.0),
        _ => None,
    };
    if let Some(v) = fixed_value {
        xi0.xi1 = v;
    }
    let start = UnconstrainedVector::from_theta(&theta0, Some(&xi0))?;
    let fixed = fixed_value.map(|v| (start.len() - 1, v));
    fit_generic(data, start, LikelihoodKind::Full, config, fixed)
}
