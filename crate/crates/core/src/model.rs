//! Two-class homoscedastic Gaussian model: parameters, the linear discriminant,
//! posterior probabilities, entropy, the Bayes allocation and exact error rates.
//!
//! The canonical configuration places the class means at `±(Δ/2, 0, …, 0)`
//! with identity covariance, so every quantity depends on the first
//! coordinate only through `λ + Δ y₁`, where `λ = log(π₁/π₂)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::special::{entropy_from_logodds, logistic, std_normal_cdf};

/// Class membership of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    One,
    Two,
}

impl ClassLabel {
    pub fn as_u8(self) -> u8 {
        match self {
            ClassLabel::One => 1,
            ClassLabel::Two => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(ClassLabel::One),
            2 => Some(ClassLabel::Two),
            _ => None,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            ClassLabel::One => ClassLabel::Two,
            ClassLabel::Two => ClassLabel::One,
        }
    }
}

/// Canonical two-class configuration `(Δ, π₁, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalModel {
    delta: f64,
    pi1: f64,
    p: usize,
}

impl CanonicalModel {
    pub fn new(delta: f64, pi1: f64, p: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Mahalanobis distance must be positive, got {delta}"
            )));
        }
        if !(pi1 > 0.0 && pi1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "prior probability must lie in (0, 1), got {pi1}"
            )));
        }
        if p == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(Self { delta, pi1, p })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    pub fn pi2(&self) -> f64 {
        1.0 - self.pi1
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Prior log-odds `λ = log(π₁/π₂)`.
    pub fn lambda(&self) -> f64 {
        (self.pi1 / self.pi2()).ln()
    }

    /// `Δ* = Δ/2 − λ/Δ`.
    pub fn delta_star(&self) -> f64 {
        0.5 * self.delta - self.lambda() / self.delta
    }

    /// The same model in a different dimension.
    pub fn with_dim(&self, p: usize) -> Result<Self> {
        Self::new(self.delta, self.pi1, p)
    }

    /// True discriminant coefficients: `β₀ = λ`, `β₁ = (Δ, 0, …, 0)`.
    pub fn beta(&self) -> DiscriminantCoeffs {
        let mut beta1 = DVector::zeros(self.p);
        beta1[0] = self.delta;
        DiscriminantCoeffs {
            beta0: self.lambda(),
            beta1,
        }
    }

    /// Class-1 mean.
    pub fn mu1(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.p);
        m[0] = 0.5 * self.delta;
        m
    }

    /// Class-2 mean.
    pub fn mu2(&self) -> DVector<f64> {
        -self.mu1()
    }
}

/// General parameters of the two-class homoscedastic Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaParams {
    pi1: f64,
    mu1: DVector<f64>,
    mu2: DVector<f64>,
    sigma: DMatrix<f64>,
}

impl ThetaParams {
    pub fn new(
        pi1: f64,
        mu1: DVector<f64>,
        mu2: DVector<f64>,
        sigma: DMatrix<f64>,
    ) -> Result<Self> {
        if !(pi1 > 0.0 && pi1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "prior probability must lie in (0, 1), got {pi1}"
            )));
        }
        let p = mu1.len();
        if p == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if mu2.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: mu2.len(),
            });
        }
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sigma.nrows(),
            });
        }
        if mu1.iter().chain(mu2.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("class means must be finite".into()));
        }
        if mu1 == mu2 {
            return Err(Error::InvalidParameter(
                "class means must be distinct".into(),
            ));
        }
        linalg::check_spd(&sigma)?;
        Ok(Self {
            pi1,
            mu1,
            mu2,
            sigma,
        })
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    pub fn pi2(&self) -> f64 {
        1.0 - self.pi1
    }

    pub fn mu1(&self) -> &DVector<f64> {
        &self.mu1
    }

    pub fn mu2(&self) -> &DVector<f64> {
        &self.mu2
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn p(&self) -> usize {
        self.mu1.len()
    }

    /// Parameters with the class labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            pi1: self.pi2(),
            mu1: self.mu2.clone(),
            mu2: self.mu1.clone(),
            sigma: self.sigma.clone(),
        }
    }
}

/// Discriminant coefficients `β = (β₀, β₁ᵀ)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantCoeffs {
    pub beta0: f64,
    pub beta1: DVector<f64>,
}

impl DiscriminantCoeffs {
    pub fn new(beta0: f64, beta1: DVector<f64>) -> Result<Self> {
        if beta1.is_empty() {
            return Err(Error::InvalidParameter("slope vector is empty".into()));
        }
        if beta1.iter().all(|&b| b == 0.0) {
            return Err(Error::UndefinedRule);
        }
        Ok(Self { beta0, beta1 })
    }

    pub fn p(&self) -> usize {
        self.beta1.len()
    }

    /// `d(y; β) = β₀ + β₁ᵀy`.
    pub fn discriminant(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.beta1.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta1.len(),
                got: y.len(),
            });
        }
        Ok(self.beta0 + self.beta1.iter().zip(y).map(|(b, x)| b * x).sum::<f64>())
    }

    /// Posterior probability `τ₁(y)` of class 1.
    pub fn posterior(&self, y: &[f64]) -> Result<f64> {
        Ok(logistic(self.discriminant(y)?))
    }

    /// Shannon entropy of the posterior class probabilities at `y`.
    pub fn entropy(&self, y: &[f64]) -> Result<f64> {
        Ok(entropy_from_logodds(self.discriminant(y)?))
    }

    /// Bayes allocation; a point on the boundary goes to class 1.
    pub fn bayes_allocate(&self, y: &[f64]) -> Result<ClassLabel> {
        Ok(allocate_from_discriminant(self.discriminant(y)?))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            beta0: self.beta0 * c,
            beta1: &self.beta1 * c,
        }
    }

    /// Coefficients as a flat vector `(β₀, β₁₁, …, β₁ₚ)`.
    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.beta0)
            .chain(self.beta1.iter().cloned())
            .collect()
    }
}

pub fn allocate_from_discriminant(d: f64) -> ClassLabel {
    if d >= 0.0 {
        ClassLabel::One
    } else {
        ClassLabel::Two
    }
}

/// Mixture parameters implied by a canonical model.
pub fn canonical_theta(model: &CanonicalModel) -> ThetaParams {
    ThetaParams {
        pi1: model.pi1(),
        mu1: model.mu1(),
        mu2: model.mu2(),
        sigma: DMatrix::identity(model.p(), model.p()),
    }
}

/// Discriminant coefficients of the Bayes rule for `theta`.
///
/// The intercept includes the prior log-odds, so that
/// `logistic(β₀ + β₁ᵀy) = π₁f₁(y) / {π₁f₁(y) + π₂f₂(y)}` holds exactly.
pub fn beta_from_theta(theta: &ThetaParams) -> Result<DiscriminantCoeffs> {
    let precision = linalg::spd_inverse(theta.sigma())?;
    let diff = theta.mu1() - theta.mu2();
    let beta1 = &precision * &diff;
    let mid = (theta.mu1() + theta.mu2()) * 0.5;
    let lambda = (theta.pi1() / theta.pi2()).ln();
    let beta0 = lambda - mid.dot(&beta1);
    DiscriminantCoeffs::new(beta0, beta1)
}

/// Error rate of the Bayes rule under the canonical model.
pub fn optimal_error(model: &CanonicalModel) -> f64 {
    let delta = model.delta();
    let ratio = model.lambda() / delta;
    model.pi1() * std_normal_cdf(-0.5 * delta - ratio)
        + model.pi2() * std_normal_cdf(-0.5 * delta + ratio)
}

/// Conditional error rate of the plug-in rule `beta_hat` when the data follow
/// the canonical model.
pub fn conditional_error(beta_hat: &DiscriminantCoeffs, model: &CanonicalModel) -> Result<f64> {
    if beta_hat.p() != model.p() {
        return Err(Error::DimensionMismatch {
            expected: model.p(),
            got: beta_hat.p(),
        });
    }
    let norm = beta_hat.beta1.norm();
    if !(norm > 0.0) {
        return Err(Error::UndefinedRule);
    }
    let half = 0.5 * model.delta() * beta_hat.beta1[0];
    let d1 = (beta_hat.beta0 + half) / norm;
    let d2 = (beta_hat.beta0 - half) / norm;
    Ok(model.pi1() * std_normal_cdf(-d1) + model.pi2() * std_normal_cdf(d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::LN_2PI;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn log_mvn(y: &DVector<f64>, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> f64 {
        let p = y.len() as f64;
        let chol = sigma.clone().cholesky().unwrap();
        let r = y - mu;
        let z = chol.l().solve_lower_triangular(&r).unwrap();
        let logdet: f64 = chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>() * 2.0;
        -0.5 * (p * LN_2PI + logdet + z.dot(&z))
    }

    // Direct density-ratio posterior, written independently of the β algebra.
    fn density_ratio_posterior(theta: &ThetaParams, y: &DVector<f64>) -> f64 {
        let a = theta.pi1().ln() + log_mvn(y, theta.mu1(), theta.sigma());
        let b = theta.pi2().ln() + log_mvn(y, theta.mu2(), theta.sigma());
        1.0 / (1.0 + (b - a).exp())
    }

    #[test]
    fn canonical_theta_substitution() {
        let m = CanonicalModel::new(2.0, 0.5, 1).unwrap();
        let t = canonical_theta(&m);
        assert_eq!(t.mu1()[0], 1.0);
        assert_eq!(t.mu2()[0], -1.0);
        assert_eq!(t.sigma()[(0, 0)], 1.0);

        let m = CanonicalModel::new(1.0, 0.3, 2).unwrap();
        let t = canonical_theta(&m);
        assert_eq!(t.mu1().as_slice(), &[0.5, 0.0]);
        assert_eq!(t.mu2().as_slice(), &[-0.5, 0.0]);
        assert_eq!(t.sigma(), &DMatrix::identity(2, 2));
        assert_eq!(t.pi1(), 0.3);

        let b = beta_from_theta(&t).unwrap();
        assert_eq!(b.beta1.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn model_validation() {
        assert!(CanonicalModel::new(0.0, 0.5, 1).is_err());
        assert!(CanonicalModel::new(1.0, 1.0, 1).is_err());
        assert!(CanonicalModel::new(1.0, 0.5, 0).is_err());
        let mu = DVector::from_vec(vec![1.0]);
        assert!(ThetaParams::new(0.5, mu.clone(), mu.clone(), DMatrix::identity(1, 1)).is_err());
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = ThetaParams::new(
            0.5,
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![-1.0, 0.0]),
            singular,
        );
        assert!(matches!(r, Err(Error::DegenerateCovariance { .. })));
    }

    #[test]
    fn beta_symmetric_priors() {
        let m = CanonicalModel::new(2.0, 0.5, 3).unwrap();
        let b = beta_from_theta(&canonical_theta(&m)).unwrap();
        assert_eq!(b.beta0, 0.0);
        assert_eq!(b.beta1.as_slice(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn beta_includes_prior_log_odds() {
        let m = CanonicalModel::new(2.0, 0.8, 2).unwrap();
        let theta = canonical_theta(&m);
        let b = beta_from_theta(&theta).unwrap();
        assert_relative_eq!(b.beta0, 4.0_f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(b.beta0, 1.3863, epsilon = 1e-4);
        assert_eq!(b.beta1.as_slice(), &[2.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let y = DVector::from_fn(2, |_, _| 3.0 * rng.sample::<f64, _>(StandardNormal));
            let direct = density_ratio_posterior(&theta, &y);
            let got = b.posterior(y.as_slice()).unwrap();
            assert_relative_eq!(got, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn beta_non_canonical_covariance() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let mu1 = DVector::from_vec(vec![1.0, 0.5]);
        let mu2 = DVector::from_vec(vec![-1.0, 1.5]);
        let theta = ThetaParams::new(0.35, mu1, mu2, sigma).unwrap();
        let b = beta_from_theta(&theta).unwrap();
        assert_relative_eq!(b.beta1[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(b.beta1[1], -1.0, max_relative = 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let y = DVector::from_fn(2, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
            let direct = density_ratio_posterior(&theta, &y);
            assert_relative_eq!(
                b.posterior(y.as_slice()).unwrap(),
                direct,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn discriminant_examples() {
        let b = DiscriminantCoeffs::new(0.0, DVector::from_vec(vec![2.0])).unwrap();
        assert_eq!(b.discriminant(&[0.0]).unwrap(), 0.0);
        assert_eq!(b.discriminant(&[1.0]).unwrap(), 2.0);
        assert!(matches!(
            b.discriminant(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let b = DiscriminantCoeffs::new(4f64.ln(), DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert!(b.discriminant(&[-(2f64.ln()), 5.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn posterior_and_entropy_examples() {
        let b = DiscriminantCoeffs::new(0.0, DVector::from_vec(vec![2.0])).unwrap();
        assert_eq!(b.posterior(&[0.0]).unwrap(), 0.5);
        let tau = b.posterior(&[1.0]).unwrap();
        assert_relative_eq!(tau, 1.0 / (1.0 + (-2.0f64).exp()), max_relative = 1e-15);
        assert_relative_eq!(tau, 0.8808, epsilon = 1e-4);
        assert_relative_eq!(
            b.entropy(&[0.0]).unwrap(),
            std::f64::consts::LN_2,
            max_relative = 1e-15
        );
        let e = -tau * tau.ln() - (1.0 - tau) * (1.0 - tau).ln();
        assert_relative_eq!(b.entropy(&[1.0]).unwrap(), e, max_relative = 1e-13);
        assert_relative_eq!(e, 0.365_334, epsilon = 1e-6);

        let far = DiscriminantCoeffs::new(-800.0, DVector::from_vec(vec![1.0])).unwrap();
        let t = far.posterior(&[0.0]).unwrap();
        assert!(t.is_finite() && t < 1e-300);
        assert!(far.entropy(&[0.0]).unwrap() < 1e-300);
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_from_discriminant(2.0), ClassLabel::One);
        assert_eq!(allocate_from_discriminant(-0.1), ClassLabel::Two);
        assert_eq!(allocate_from_discriminant(0.0), ClassLabel::One);
    }

    #[test]
    fn optimal_error_symmetric() {
        let m = CanonicalModel::new(2.0, 0.5, 1).unwrap();
        assert_relative_eq!(
            optimal_error(&m),
            0.158_655_253_931_457,
            max_relative = 1e-12
        );
        let m = CanonicalModel::new(1.0, 0.5, 1).unwrap();
        assert_relative_eq!(
            optimal_error(&m),
            0.308_537_538_725_987,
            max_relative = 1e-12
        );
    }

    // Classify simulated points with the true rule and count mistakes.
    fn monte_carlo_error(
        model: &CanonicalModel,
        beta: &DiscriminantCoeffs,
        draws: usize,
        seed: u64,
    ) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 * model.delta();
        let mut wrong = 0usize;
        for _ in 0..draws {
            let class_one = rng.random::<f64>() < model.pi1();
            let y1 = if class_one { half } else { -half } + rng.sample::<f64, _>(StandardNormal);
            let d = beta.beta0 + beta.beta1[0] * y1;
            let said_one = d >= 0.0;
            if said_one != class_one {
                wrong += 1;
            }
        }
        wrong as f64 / draws as f64
    }

    #[test]
    fn optimal_error_matches_simulation() {
        let m = CanonicalModel::new(2.0, 0.7, 1).unwrap();
        let mc = monte_carlo_error(&m, &m.beta(), 10_000_000, 5);
        assert!(
            (optimal_error(&m) - mc).abs() < 5e-4,
            "{} vs {}",
            optimal_error(&m),
            mc
        );
    }

    #[test]
    fn conditional_error_examples() {
        let m = CanonicalModel::new(2.0, 0.5, 2).unwrap();
        let b = m.beta();
        assert_relative_eq!(
            conditional_error(&b, &m).unwrap(),
            optimal_error(&m),
            max_relative = 1e-14
        );
        for c in [0.1, 3.0, 17.0] {
            assert_relative_eq!(
                conditional_error(&b.scaled(c), &m).unwrap(),
                optimal_error(&m),
                max_relative = 1e-14
            );
        }
        let zero = DiscriminantCoeffs {
            beta0: 1.0,
            beta1: DVector::zeros(2),
        };
        assert!(matches!(
            conditional_error(&zero, &m),
            Err(Error::UndefinedRule)
        ));

        let m1 = CanonicalModel::new(2.0, 0.5, 1).unwrap();
        let bh = DiscriminantCoeffs::new(0.5, DVector::from_vec(vec![2.0])).unwrap();
        let mc = monte_carlo_error(&m1, &bh, 10_000_000, 6);
        let exact = conditional_error(&bh, &m1).unwrap();
        assert!((exact - mc).abs() < 5e-4, "{exact} vs {mc}");
    }
}
