//! Missing-label selection mechanism.
//!
//! The probability that a record's label is missing depends on its features
//! only through the discriminant `d(y; β)`:
//!
//! * [`Mechanism::DiscriminantSquare`]: `q = logistic(ξ₀ + ξ₁ d²)`,
//! * [`Mechanism::Entropy`]: `q = logistic(ξ₀ + ξ₁ e(y))`,
//! * [`Mechanism::Mcar`]: `q = logistic(ξ₀)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{CanonicalModel, DiscriminantCoeffs, ThetaParams};
use crate::quadrature::mixture_expectation;
use crate::special::{entropy_from_logodds, logistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mechanism {
    #[default]
    DiscriminantSquare,
    Entropy,
    Mcar,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mechanism::DiscriminantSquare => "discriminant-square",
            Mechanism::Entropy => "entropy",
            Mechanism::Mcar => "mcar",
        };
        f.write_str(s)
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discriminant-square" | "d2" => Ok(Mechanism::DiscriminantSquare),
            "entropy" => Ok(Mechanism::Entropy),
            "mcar" => Ok(Mechanism::Mcar),
            other => Err(Error::InvalidParameter(format!(
                "unknown mechanism '{other}'"
            ))),
        }
    }
}

impl Mechanism {
    /// The covariate the slope `ξ₁` multiplies, as a function of `d`.
    #[inline]
    pub fn covariate(self, d: f64) -> f64 {
        match self {
            Mechanism::DiscriminantSquare => d * d,
            Mechanism::Entropy => entropy_from_logodds(d),
            Mechanism::Mcar => 0.0,
        }
    }

    /// Derivative of [`Mechanism::covariate`] with respect to `d`.
    #[inline]
    pub fn covariate_slope(self, d: f64) -> f64 {
        match self {
            Mechanism::DiscriminantSquare => 2.0 * d,
            Mechanism::Entropy => -d * logistic(d) * logistic(-d),
            Mechanism::Mcar => 0.0,
        }
    }
}

/// Logistic selection parameters `ξ = (ξ₀, ξ₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissParams {
    pub xi0: f64,
    pub xi1: f64,
}

impl MissParams {
    pub fn new(xi0: f64, xi1: f64) -> Result<Self> {
        if !xi0.is_finite() || !xi1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "selection parameters must be finite, got ({xi0}, {xi1})"
            )));
        }
        Ok(Self { xi0, xi1 })
    }

    /// Linear predictor of the selection model for discriminant value `d`.
    #[inline]
    pub fn linear_predictor(&self, d: f64, mechanism: Mechanism) -> f64 {
        match mechanism {
            Mechanism::Mcar => self.xi0,
            m => self.xi0 + self.xi1 * m.covariate(d),
        }
    }

    /// Missing-label probability for discriminant value `d`.
    #[inline]
    pub fn q_from_discriminant(&self, d: f64, mechanism: Mechanism) -> f64 {
        logistic(self.linear_predictor(d, mechanism))
    }
}

/// Full parameter `Ψ = (θ, ξ)` with the mechanism it is read under.
#[derive(Debug, Clone, PartialEq)]
pub struct FullParams {
    pub theta: ThetaParams,
    pub xi: MissParams,
    pub mechanism: Mechanism,
}

impl FullParams {
    pub fn new(theta: ThetaParams, xi: MissParams, mechanism: Mechanism) -> Self {
        Self {
            theta,
            xi,
            mechanism,
        }
    }

    pub fn canonical(model: &CanonicalModel, xi: MissParams, mechanism: Mechanism) -> Self {
        Self {
            theta: crate::model::canonical_theta(model),
            xi,
            mechanism,
        }
    }
}

/// Probability that the label of a record with features `y` is missing.
pub fn q_prob(
    beta: &DiscriminantCoeffs,
    xi: &MissParams,
    y: &[f64],
    mechanism: Mechanism,
) -> Result<f64> {
    let d = beta.discriminant(y)?;
    Ok(xi.q_from_discriminant(d, mechanism))
}

/// Expected proportion of missing labels `γ(Ψ) = E{q(Y; β, ξ)}` under the
/// canonical model.
pub fn gamma(model: &CanonicalModel, xi: &MissParams, mechanism: Mechanism) -> Result<f64> {
    if mechanism == Mechanism::Mcar || xi.xi1 == 0.0 {
        return Ok(logistic(xi.xi0));
    }
    let lambda = model.lambda();
    let delta = model.delta();
    mixture_expectation(
        |y1| xi.q_from_discriminant(lambda + delta * y1, mechanism),
        delta,
        model.pi1(),
    )
}
