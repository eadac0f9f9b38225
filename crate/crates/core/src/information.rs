//! Fisher information about the discriminant coefficients `β` under the
//! canonical model, per observation.
//!
//! Every matrix here has the same sparsity: a dense leading 2×2 block for
//! `(β₀, β₁₁)` and a constant diagonal for the remaining slopes. The scalar
//! constants are one-dimensional expectations over the first feature `y₁`,
//! which carries all the class information in canonical form.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::linalg::{guarded_inverse, inverse_2x2, symmetrize};
use crate::missingness::MissParams;
use crate::model::CanonicalModel;
use crate::quadrature::mixture_expectations;
use crate::special::logistic;

/// Symmetric positive semidefinite `(p+1)×(p+1)` information matrix about
/// `β`, indexed `(β₀, β₁₁, …, β₁ₚ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    m: DMatrix<f64>,
}

impl InfoMatrix {
    /// Wraps `m` after checking symmetry and that no eigenvalue falls below
    /// `-1e-10·trace`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() < 2 {
            return Err(Error::InvalidParameter(
                "information matrix must be square with p ≥ 1".into(),
            ));
        }
        if !crate::linalg::is_symmetric(&m, 1e-9) {
            return Err(Error::InvalidParameter(
                "information matrix is not symmetric".into(),
            ));
        }
        let m = symmetrize(&m);
        let trace = m.trace();
        let (min, _) = crate::linalg::eigen_range(&m);
        if min < -1e-10 * trace.abs() {
            return Err(Error::InvalidParameter(format!(
                "information matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(Self { m })
    }

    /// Builds the structured matrix with leading block `[[x00, x01], [x01, x11]]`
    /// and `trailing` on the remaining diagonal.
    pub fn structured(p: usize, lead: [f64; 3], trailing: f64) -> Result<Self> {
        Self::new(structured(p, lead, trailing))
    }

    pub fn p(&self) -> usize {
        self.m.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Asymptotic covariance `n·V` implied by this information, refused when
    /// the condition number exceeds the near-singularity threshold.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        guarded_inverse(&self.m, "information about beta")
    }
}

fn structured(p: usize, lead: [f64; 3], trailing: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p + 1, p + 1);
    m[(0, 0)] = lead[0];
    m[(0, 1)] = lead[1];
    m[(1, 0)] = lead[1];
    m[(1, 1)] = lead[2];
    for j in 2..=p {
        m[(j, j)] = trailing;
    }
    m
}

/// Scalar constants of the information decomposition.
///
/// `a*` belong to the complete-data information, `d*` to the conditional
/// logistic information given a missing label (already divided by `γ`),
/// `b*` to the selection-score block about `β`, `r*` to the cross block
/// between `β` and `ξ`, `s*` to the information about `ξ`, and `w*` to the
/// correction `R S⁻¹ Rᵀ` for estimating `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoBlocks {
    pub gamma: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub u0: f64,
}

impl InfoBlocks {
    /// Leading 2×2 block `H = a − γd + b − w` of the full information.
    pub fn h(&self) -> Matrix2<f64> {
        let g = self.gamma;
        Matrix2::new(
            self.a0 - g * self.d0 + self.b0 - self.w0,
            self.a1 - g * self.d1 + self.b1 - self.w1,
            self.a1 - g * self.d1 + self.b1 - self.w1,
            self.a2 - g * self.d2 + self.b2 - self.w2,
        )
    }

    /// Cross block `R` between `(β₀, β₁₁)` and `(ξ₀, ξ₁)`.
    pub fn r(&self) -> Matrix2<f64> {
        Matrix2::new(self.r0, self.r1, self.r2, self.r3)
    }

    /// Information about `ξ`.
    pub fn s(&self) -> Matrix2<f64> {
        Matrix2::new(self.s0, self.s1, self.s1, self.s2)
    }
}

/// `[a₀, a₁, a₂, a₃]` of the complete-data information.
pub fn cc_constants(model: &CanonicalModel) -> [f64; 4] {
    let (pi1, pi2, delta) = (model.pi1(), model.pi2(), model.delta());
    let pp = pi1 * pi2;
    let inv = Matrix2::new(
        1.0 + 0.25 * delta * delta,
        -(pi2 - pi1) * 0.5 * delta,
        -(pi2 - pi1) * 0.5 * delta,
        1.0 + 2.0 * pp * delta * delta,
    ) / pp;
    let a = inverse_2x2(&inv).expect("complete-data block is positive definite");
    [
        a[(0, 0)],
        0.5 * (a[(0, 1)] + a[(1, 0)]),
        a[(1, 1)],
        pp / (1.0 + delta * delta * pp),
    ]
}

/// Information about `β` from a completely classified sample.
pub fn info_cc_beta(model: &CanonicalModel) -> InfoMatrix {
    let [a0, a1, a2, a3] = cc_constants(model);
    InfoMatrix {
        m: structured(model.p(), [a0, a1, a2], a3),
    }
}

/// `E[y₁ᵏ τ₁τ₂]`, k = 0, 1, 2: the unconditional logistic information.
pub fn lr_moments(model: &CanonicalModel) -> Result<[f64; 3]> {
    let (lambda, delta) = (model.lambda(), model.delta());
    mixture_expectations(
        |y| {
            let d = lambda + delta * y;
            let t = logistic(d) * logistic(-d);
            [t, y * t, y * y * t]
        },
        delta,
        model.pi1(),
    )
}

/// Integrals needed by the selection blocks, each converged on its own.
fn selection_integrals(model: &CanonicalModel, xi: &MissParams) -> Result<[f64; 14]> {
    let (lambda, delta) = (model.lambda(), model.delta());
    let (xi0, xi1) = (xi.xi0, xi.xi1);
    mixture_expectations(
        |y| {
            let d = lambda + delta * y;
            let d2 = d * d;
            let q = logistic(xi0 + xi1 * d2);
            let v = q * logistic(-(xi0 + xi1 * d2));
            let t = logistic(d) * logistic(-d) * q;
            let bb = 4.0 * xi1 * xi1 * d2 * v;
            let rr = 2.0 * xi1 * d * v;
            [
                q,
                t,
                y * t,
                y * y * t,
                bb,
                bb * y,
                bb * y * y,
                rr,
                rr * d2,
                rr * y,
                rr * d2 * y,
                v,
                d2 * v,
                d2 * d2 * v,
            ]
        },
        delta,
        model.pi1(),
    )
}

/// All scalar constants for the discriminant-square selection model.
pub fn info_miss_blocks(model: &CanonicalModel, xi: &MissParams) -> Result<InfoBlocks> {
    let [a0, a1, a2, a3] = cc_constants(model);
    let [gamma, e0, e1, e2, b0, b1, b2, r0, r1, r2, r3, s0, s1, s2] =
        selection_integrals(model, xi)?;
    if !(gamma > 0.0) {
        return Err(Error::UndefinedConditional(gamma));
    }
    let mut blocks = InfoBlocks {
        gamma,
        a0,
        a1,
        a2,
        a3,
        d0: e0 / gamma,
        d1: e1 / gamma,
        d2: e2 / gamma,
        b0,
        b1,
        b2,
        r0,
        r1,
        r2,
        r3,
        s0,
        s1,
        s2,
        w0: 0.0,
        w1: 0.0,
        w2: 0.0,
        u0: a3 - e0 + b0,
    };
    let s = blocks.s();
    let det = s0 * s2 - s1 * s1;
    let condition = {
        let tr = s0 + s2;
        let disc = (0.25 * (s0 - s2).powi(2) + s1 * s1).sqrt();
        (0.5 * tr + disc) / (0.5 * tr - disc)
    };
    if !(det > 0.0) || !(condition <= crate::linalg::MAX_CONDITION) {
        return Err(Error::IllConditioned {
            what: "selection information",
            condition,
        });
    }
    let s_inv = inverse_2x2(&s).ok_or(Error::IllConditioned {
        what: "selection information",
        condition,
    })?;
    let r = blocks.r();
    let w = r * s_inv * r.transpose();
    blocks.w0 = w[(0, 0)];
    blocks.w1 = 0.5 * (w[(0, 1)] + w[(1, 0)]);
    blocks.w2 = w[(1, 1)];
    Ok(blocks)
}

/// `γ(Ψ)·I_clr(β)`, the complete-data logistic information lost on records
/// whose label is missing, before dividing by `γ`.
fn clr_scaled(model: &CanonicalModel, b: &InfoBlocks) -> DMatrix<f64> {
    let g = b.gamma;
    structured(model.p(), [g * b.d0, g * b.d1, g * b.d2], g * b.d0)
}

/// Conditional logistic information about `β` given that the label is
/// missing.
pub fn info_clr_beta(model: &CanonicalModel, xi: &MissParams) -> Result<InfoMatrix> {
    let b = info_miss_blocks(model, xi)?;
    InfoMatrix::new(structured(model.p(), [b.d0, b.d1, b.d2], b.d0))
}

/// Selection-score block `B₂₂` about `β`.
pub fn b22(model: &CanonicalModel, b: &InfoBlocks) -> DMatrix<f64> {
    structured(model.p(), [b.b0, b.b1, b.b2], b.b0)
}

/// Cross block `B₂₃` between `β` and `ξ`; only its first two rows are nonzero.
pub fn b23(model: &CanonicalModel, b: &InfoBlocks) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(model.p() + 1, 2);
    m[(0, 0)] = b.r0;
    m[(0, 1)] = b.r1;
    m[(1, 0)] = b.r2;
    m[(1, 1)] = b.r3;
    m
}

/// Information about `β` in the missing-label indicators after accounting
/// for the estimation of `ξ`: `B₂₂ − B₂₃B₃₃⁻¹B₃₂`.
pub fn info_miss_beta(model: &CanonicalModel, xi: &MissParams) -> Result<InfoMatrix> {
    let b = info_miss_blocks(model, xi)?;
    let mut m = b22(model, &b);
    m[(0, 0)] -= b.w0;
    m[(0, 1)] -= b.w1;
    m[(1, 0)] -= b.w1;
    m[(1, 1)] -= b.w2;
    InfoMatrix::new(m)
}

/// Joint information about `(β, ξ)` from the full likelihood, a
/// `(p+3)×(p+3)` matrix with `ξ₀, ξ₁` last.
pub fn joint_info(model: &CanonicalModel, xi: &MissParams) -> Result<DMatrix<f64>> {
    let b = info_miss_blocks(model, xi)?;
    let k = model.p() + 1;
    let beta_block = info_cc_beta(model).into_matrix() - clr_scaled(model, &b) + b22(model, &b);
    let cross = b23(model, &b);
    let mut m = DMatrix::zeros(k + 2, k + 2);
    m.view_mut((0, 0), (k, k)).copy_from(&beta_block);
    m.view_mut((0, k), (k, 2)).copy_from(&cross);
    m.view_mut((k, 0), (2, k)).copy_from(&cross.transpose());
    m[(k, k)] = b.s0;
    m[(k, k + 1)] = b.s1;
    m[(k + 1, k)] = b.s1;
    m[(k + 1, k + 1)] = b.s2;
    Ok(m)
}

/// Information about `β` from a partially classified sample under the full
/// likelihood: the `β` block of the inverse joint information, inverted.
pub fn info_full_beta(model: &CanonicalModel, xi: &MissParams) -> Result<InfoMatrix> {
    let joint = joint_info(model, xi)?;
    let k = model.p() + 1;
    let cov = guarded_inverse(&joint, "joint information about (beta, xi)")?;
    let beta_cov = cov.view((0, 0), (k, k)).into_owned();
    InfoMatrix::new(guarded_inverse(
        &symmetrize(&beta_cov),
        "covariance of beta",
    )?)
}

/// Information about `β` from the ignore likelihood when labels are missing
/// completely at random with proportion `gamma_bar`.
pub fn info_ig_beta(model: &CanonicalModel, gamma_bar: f64) -> Result<InfoMatrix> {
    if !(0.0..=1.0).contains(&gamma_bar) {
        return Err(Error::InvalidParameter(format!(
            "missing proportion must lie in [0, 1], got {gamma_bar}"
        )));
    }
    let [a0, a1, a2, a3] = cc_constants(model);
    let [l0, l1, l2] = lr_moments(model)?;
    let g = gamma_bar;
    let m = structured(
        model.p(),
        [a0 - g * l0, a1 - g * l1, a2 - g * l2],
        a3 - g * l0,
    );
    let condition = crate::linalg::condition_number(&m);
    if !(condition <= crate::linalg::MAX_CONDITION) {
        return Err(Error::IllConditioned {
            what: "ignore-likelihood information",
            condition,
        });
    }
    InfoMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn complete_information_equal_priors() {
        let m = CanonicalModel::new(2.0, 0.5, 3).unwrap();
        let i = info_cc_beta(&m);
        assert_relative_eq!(i.get(0, 0), 0.125, max_relative = 1e-14);
        assert_relative_eq!(i.get(2, 2), 0.125, max_relative = 1e-14);
        assert_relative_eq!(i.get(3, 3), 0.125, max_relative = 1e-14);
        assert_eq!(i.get(0, 1), 0.0);
    }

    #[test]
    fn complete_block_is_inverse_of_displayed_matrix() {
        let m = CanonicalModel::new(1.5, 0.7, 1).unwrap();
        let (p1, p2, d) = (0.7, 0.3, 1.5);
        let k = 1.0 / (p1 * p2);
        let (x00, x01, x11) = (
            k * (1.0 + d * d / 4.0),
            -k * (p2 - p1) * d / 2.0,
            k * (1.0 + 2.0 * p1 * p2 * d * d),
        );
        let det = x00 * x11 - x01 * x01;
        let i = info_cc_beta(&m);
        assert_relative_eq!(i.get(0, 0), x11 / det, max_relative = 1e-13);
        assert_relative_eq!(i.get(0, 1), -x01 / det, max_relative = 1e-13);
        assert_relative_eq!(i.get(1, 1), x00 / det, max_relative = 1e-13);
    }

    #[test]
    fn odd_integrals_vanish_for_equal_priors() {
        let m = CanonicalModel::new(2.0, 0.5, 1).unwrap();
        let b = info_miss_blocks(&m, &MissParams::new(3.0, -1.0).unwrap()).unwrap();
        assert!(b.d1.abs() < 1e-14);
        assert!(b.r0.abs() < 1e-14 && b.r1.abs() < 1e-14);
        assert!(b.b1.abs() < 1e-14);
        assert!(b.w0.abs() < 1e-14 && b.w1.abs() < 1e-14);
    }

    #[test]
    fn mcar_full_information_reduces() {
        let m = CanonicalModel::new(1.5, 0.4, 2).unwrap();
        let xi = MissParams::new(0.3, 0.0).unwrap();
        let full = info_full_beta(&m, &xi).unwrap();
        let ig = info_ig_beta(&m, logistic(0.3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((full.get(i, j) - ig.get(i, j)).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn ignore_information_is_linear_in_proportion() {
        let m = CanonicalModel::new(2.0, 0.3, 2).unwrap();
        let i0 = info_ig_beta(&m, 0.0).unwrap();
        let i1 = info_ig_beta(&m, 1.0).unwrap();
        let ih = info_ig_beta(&m, 0.5).unwrap();
        assert_eq!(i0, info_cc_beta(&m));
        let mid = (i0.matrix() + i1.matrix()) * 0.5;
        assert!((ih.matrix() - mid).abs().max() < 1e-15);
    }
}
