//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use crate::error::{Error, Result};

/// Minimum eigenvalue, relative to the largest, accepted for a covariance matrix.
pub const MIN_EIGEN_RATIO: f64 = 1e-10;

/// Condition number above which an information matrix is reported rather than inverted.
pub const MAX_CONDITION: f64 = 1e12;

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().fold(0.0_f64, |a, &x| a.max(x.abs())).max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigenvalue extremes of a symmetric matrix, `(min, max)`.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Checks that `sigma` is a valid covariance matrix.
pub fn check_spd(sigma: &DMatrix<f64>) -> Result<()> {
    if !is_symmetric(sigma, 1e-12) {
        return Err(Error::InvalidParameter(
            "covariance matrix is not symmetric".into(),
        ));
    }
    let (min, max) = eigen_range(sigma);
    if !(max > 0.0) || !(min > MIN_EIGEN_RATIO * max) {
        return Err(Error::DegenerateCovariance {
            ratio: if max > 0.0 { min / max } else { 0.0 },
        });
    }
    Ok(())
}

/// Inverse of a symmetric positive-definite matrix via Cholesky, guarded by
/// the eigenvalue-ratio test in [`check_spd`].
pub fn spd_inverse(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_spd(sigma)?;
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateCovariance { ratio: 0.0 })?;
    let inv = chol.inverse();
    Ok(symmetrize(&inv))
}

/// 2-norm condition number of a symmetric matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let mut min = f64::INFINITY;
    let mut max = 0.0_f64;
    for &l in eig.eigenvalues.iter() {
        min = min.min(l.abs());
        max = max.max(l.abs());
    }
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a symmetric information matrix, refused above [`MAX_CONDITION`].
pub fn guarded_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let condition = condition_number(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { what, condition });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { what, condition })?;
    Ok(symmetrize(&inv))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Closed-form inverse of a 2x2 matrix.
pub fn inverse_2x2(m: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_inverse_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            spd_inverse(&m),
            Err(Error::DegenerateCovariance { .. })
        ));
    }

    #[test]
    fn spd_inverse_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        let inv = spd_inverse(&m).unwrap();
        assert!((inv[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((inv[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_2x2_roundtrip() {
        let m = Matrix2::new(2.0, 0.3, 0.3, 1.5);
        let inv = inverse_2x2(&m).unwrap();
        let id = m * inv;
        assert!((id - Matrix2::identity()).norm() < 1e-15);
    }

    #[test]
    fn guarded_inverse_refuses_near_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert!(matches!(
            guarded_inverse(&m, "test"),
            Err(Error::IllConditioned { .. })
        ));
    }
}
