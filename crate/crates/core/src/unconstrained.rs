//! Unconstrained coordinates for the mixture and selection parameters.
//!
//! Layout: `logit π₁`, `μ₁` (p), `μ₂` (p), the lower triangle of the Cholesky
//! factor of `Σ` in row-major order with log-transformed diagonal
//! (p(p+1)/2), then optionally `ξ₀, ξ₁`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::missingness::{FullParams, Mechanism, MissParams};
use crate::model::ThetaParams;
use crate::special::{logistic, logit};

#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedVector {
    p: usize,
    with_xi: bool,
    values: Vec<f64>,
}

impl UnconstrainedVector {
    /// Number of coordinates describing `θ` in dimension `p`.
    pub fn theta_len(p: usize) -> usize {
        1 + 2 * p + p * (p + 1) / 2
    }

    pub fn expected_len(p: usize, with_xi: bool) -> usize {
        Self::theta_len(p) + if with_xi { 2 } else { 0 }
    }

    pub fn from_values(p: usize, values: Vec<f64>, with_xi: bool) -> Result<Self> {
        let expected = Self::expected_len(p, with_xi);
        if p == 0 || values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { p, with_xi, values })
    }

    pub fn from_theta(theta: &ThetaParams, xi: Option<&MissParams>) -> Result<Self> {
        let p = theta.p();
        let chol = theta
            .sigma()
            .clone()
            .cholesky()
            .ok_or(Error::DegenerateCovariance { ratio: 0.0 })?;
        let l = chol.l();
        let mut values = Vec::with_capacity(Self::expected_len(p, xi.is_some()));
        values.push(logit(theta.pi1()));
        values.extend(theta.mu1().iter());
        values.extend(theta.mu2().iter());
        for i in 0..p {
            for j in 0..=i {
                values.push(if i == j { l[(i, i)].ln() } else { l[(i, j)] });
            }
        }
        if let Some(xi) = xi {
            values.push(xi.xi0);
            values.push(xi.xi1);
        }
        Ok(Self {
            p,
            with_xi: xi.is_some(),
            values,
        })
    }

    pub fn from_full(psi: &FullParams) -> Result<Self> {
        Self::from_theta(&psi.theta, Some(&psi.xi))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn has_xi(&self) -> bool {
        self.with_xi
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same layout with different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_values(self.p, values, self.with_xi)
    }

    /// Drops or appends the selection coordinates.
    pub fn theta_part(&self) -> Self {
        Self {
            p: self.p,
            with_xi: false,
            values: self.values[..Self::theta_len(self.p)].to_vec(),
        }
    }

    pub fn with_xi(&self, xi: &MissParams) -> Self {
        let mut values = self.values[..Self::theta_len(self.p)].to_vec();
        values.push(xi.xi0);
        values.push(xi.xi1);
        Self {
            p: self.p,
            with_xi: true,
            values,
        }
    }

    pub fn log_odds(&self) -> f64 {
        self.values[0]
    }

    pub fn pi1(&self) -> f64 {
        logistic(self.values[0])
    }

    pub fn mu1(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values[1..1 + self.p])
    }

    pub fn mu2(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values[1 + self.p..1 + 2 * self.p])
    }

    /// Offset of the Cholesky block.
    pub(crate) fn chol_offset(&self) -> usize {
        1 + 2 * self.p
    }

    /// Lower-triangular Cholesky factor of `Σ`.
    pub fn chol(&self) -> DMatrix<f64> {
        let p = self.p;
        let mut l = DMatrix::zeros(p, p);
        let mut k = self.chol_offset();
        for i in 0..p {
            for j in 0..=i {
                l[(i, j)] = if i == j {
                    self.values[k].exp()
                } else {
                    self.values[k]
                };
                k += 1;
            }
        }
        l
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        let l = self.chol();
        &l * l.transpose()
    }

    pub fn xi(&self) -> Option<MissParams> {
        if !self.with_xi {
            return None;
        }
        let k = Self::theta_len(self.p);
        Some(MissParams {
            xi0: self.values[k],
            xi1: self.values[k + 1],
        })
    }

    pub fn to_theta(&self) -> Result<ThetaParams> {
        ThetaParams::new(self.pi1(), self.mu1(), self.mu2(), self.sigma())
    }

    pub fn to_full(&self, mechanism: Mechanism) -> Result<FullParams> {
        let xi = self
            .xi()
            .ok_or_else(|| Error::InvalidParameter("vector has no selection coordinates".into()))?;
        Ok(FullParams::new(
            self.to_theta()?,
            MissParams::new(xi.xi0, xi.xi1)?,
            mechanism,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_to_rounding() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 0.7]);
        let theta = ThetaParams::new(
            0.35,
            DVector::from_vec(vec![1.0, -0.5, 0.25]),
            DVector::from_vec(vec![-0.2, 0.4, 0.0]),
            sigma.clone(),
        )
        .unwrap();
        let xi = MissParams::new(2.5, -1.25).unwrap();
        let u = UnconstrainedVector::from_theta(&theta, Some(&xi)).unwrap();
        assert_eq!(u.len(), UnconstrainedVector::expected_len(3, true));
        let back = u.to_full(Mechanism::DiscriminantSquare).unwrap();
        assert!((back.theta.pi1() - 0.35).abs() < 1e-15);
        assert!((back.theta.sigma() - &sigma).abs().max() < 1e-12);
        assert_eq!(back.theta.mu1(), theta.mu1());
        assert_eq!(back.xi, xi);
        let again = UnconstrainedVector::from_full(&back).unwrap();
        for (a, b) in again.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(UnconstrainedVector::from_values(2, vec![0.0; 5], false).is_err());
        assert!(UnconstrainedVector::from_values(1, vec![0.0; 4], false).is_ok());
        assert!(UnconstrainedVector::from_values(1, vec![0.0; 6], true).is_ok());
    }
}
