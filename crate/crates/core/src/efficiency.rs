//! First-order expected excess error of plug-in rules and the asymptotic
//! relative efficiencies built from them.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::information::{info_cc_beta, info_ig_beta, info_miss_blocks, InfoBlocks};
use crate::linalg::inverse_2x2;
use crate::missingness::{gamma, Mechanism, MissParams};
use crate::model::CanonicalModel;
use crate::special::std_normal_pdf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AREResult {
    pub are: f64,
    /// Excess-error coefficient (per `1/n`) of the completely classified rule.
    pub numerator_excess_coeff: f64,
    /// Excess-error coefficient (per `1/n`) of the competing rule.
    pub denominator_excess_coeff: f64,
    /// `[Q₁, Q₂, Q₃, Q₄]` when the general-prior formula was used or is available.
    pub q: Option<[f64; 4]>,
}

impl AREResult {
    fn from_coeffs(num: f64, den: f64, q: Option<[f64; 4]>) -> Self {
        Self {
            are: num / den,
            numerator_excess_coeff: num,
            denominator_excess_coeff: den,
            q,
        }
    }
}

/// Common factor `π₁φ(Δ*)/(2Δ)` of the excess-error expansion.
fn prefactor(model: &CanonicalModel) -> f64 {
    model.pi1() * std_normal_pdf(model.delta_star()) / (2.0 * model.delta())
}

/// First-order coefficient of the expected excess error rate of a plug-in
/// rule whose coefficient estimate has asymptotic covariance `V/n`.
pub fn excess_error_coeff(v: &DMatrix<f64>, model: &CanonicalModel) -> Result<f64> {
    let k = model.p() + 1;
    if v.nrows() != k || v.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: v.nrows(),
        });
    }
    let ratio = model.lambda() / model.delta();
    let mut w = v[(0, 0)] - 2.0 * ratio * v[(0, 1)] + ratio * ratio * v[(1, 1)];
    for i in 2..k {
        w += v[(i, i)];
    }
    Ok(prefactor(model) * w)
}

/// `vᵀ M v` with `v = (1, −λ/Δ)`.
fn contrast(model: &CanonicalModel, m: &Matrix2<f64>) -> f64 {
    let v = Vector2::new(1.0, -model.lambda() / model.delta());
    (v.transpose() * m * v)[(0, 0)]
}

/// `[Q₁, Q₂, Q₃, Q₄]` of the general-prior efficiency formula.
pub fn q_constants(model: &CanonicalModel, blocks: &InfoBlocks) -> Result<[f64; 4]> {
    let (pi1, pi2, delta) = (model.pi1(), model.pi2(), model.delta());
    let pp = pi1 * pi2;
    let cc_cov = Matrix2::new(
        1.0 + 0.25 * delta * delta,
        -(pi2 - pi1) * 0.5 * delta,
        -(pi2 - pi1) * 0.5 * delta,
        1.0 + 2.0 * pp * delta * delta,
    ) / pp;
    let q1 = contrast(model, &cc_cov);
    let q2 = (1.0 + pp * delta * delta) / pp;
    let h = blocks.h();
    let h_inv = inverse_2x2(&h).ok_or(Error::IllConditioned {
        what: "leading block of the full information",
        condition: f64::INFINITY,
    })?;
    let q3 = contrast(model, &h_inv);
    if !(blocks.u0 > 0.0) {
        return Err(Error::IllConditioned {
            what: "trailing diagonal of the full information",
            condition: f64::INFINITY,
        });
    }
    let q4 = 1.0 / blocks.u0;
    Ok([q1, q2, q3, q4])
}

/// Efficiency of the full-likelihood rule from a partially classified sample
/// relative to the completely classified rule, by the general-prior formula.
pub fn are_full_general(model: &CanonicalModel, xi: &MissParams) -> Result<AREResult> {
    let blocks = info_miss_blocks(model, xi)?;
    let q = q_constants(model, &blocks)?;
    let extra = (model.p() - 1) as f64;
    let c = prefactor(model);
    Ok(AREResult::from_coeffs(
        c * (q[0] + extra * q[1]),
        c * (q[2] + extra * q[3]),
        Some(q),
    ))
}

/// Efficiency of the full-likelihood rule relative to the completely
/// classified rule. With equal priors this is `4(1 + Δ²/4)u₀` for every `p`;
/// otherwise the general-prior formula is used.
pub fn are_full(model: &CanonicalModel, xi: &MissParams) -> Result<AREResult> {
    if model.pi1() != 0.5 {
        return are_full_general(model, xi);
    }
    let blocks = info_miss_blocks(model, xi)?;
    if !(blocks.u0 > 0.0) {
        return Err(Error::IllConditioned {
            what: "trailing diagonal of the full information",
            condition: f64::INFINITY,
        });
    }
    let delta = model.delta();
    let q_cc = 4.0 * (1.0 + 0.25 * delta * delta);
    let q_pc = 1.0 / blocks.u0;
    let p = model.p() as f64;
    let c = prefactor(model);
    let mut out =
        AREResult::from_coeffs(c * p * q_cc, c * p * q_pc, Some([q_cc, q_cc, q_pc, q_pc]));
    out.are = q_cc * blocks.u0;
    Ok(out)
}

/// Efficiency of the rule fitted by ignoring the missing-label mechanism
/// when labels are missing completely at random with proportion `gamma_bar`.
pub fn are_ignore_mcar(model: &CanonicalModel, gamma_bar: f64) -> Result<AREResult> {
    let v_cc = info_cc_beta(model).inverse()?;
    let v_ig = info_ig_beta(model, gamma_bar)?.inverse()?;
    let num = excess_error_coeff(&v_cc, model)?;
    let den = excess_error_coeff(&v_ig, model)?;
    Ok(AREResult::from_coeffs(num, den, None))
}

/// Parameter grid for the full-likelihood efficiency tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub deltas: Vec<f64>,
    pub xi0s: Vec<f64>,
    pub xi1s: Vec<f64>,
    pub pi1: f64,
    pub p: usize,
}

impl GridSpec {
    /// The 5 × 3 × 5 reference grid with equal priors.
    pub fn published() -> Self {
        Self {
            deltas: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            xi0s: vec![1.5, 3.0, 5.0],
            xi1s: vec![-0.1, -0.5, -1.0, -5.0, -10.0],
            pi1: 0.5,
            p: 1,
        }
    }

    /// Cells in row-major order: `ξ₁` slowest, then `ξ₀`, then `Δ`.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.deltas.len() * self.xi0s.len() * self.xi1s.len());
        for &xi1 in &self.xi1s {
            for &xi0 in &self.xi0s {
                for &delta in &self.deltas {
                    out.push((delta, xi0, xi1));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub delta: f64,
    pub xi0: f64,
    pub xi1: f64,
    pub are: Option<f64>,
    pub gamma: Option<f64>,
    pub error: Option<String>,
}

fn evaluate_cell(spec: &GridSpec, delta: f64, xi0: f64, xi1: f64) -> GridCell {
    let run = || -> Result<(f64, f64)> {
        let model = CanonicalModel::new(delta, spec.pi1, spec.p)?;
        let xi = MissParams::new(xi0, xi1)?;
        let g = gamma(&model, &xi, Mechanism::DiscriminantSquare)?;
        let are = are_full(&model, &xi)?.are;
        Ok((are, g))
    };
    match run() {
        Ok((are, g)) => GridCell {
            delta,
            xi0,
            xi1,
            are: Some(are),
            gamma: Some(g),
            error: None,
        },
        Err(e) => GridCell {
            delta,
            xi0,
            xi1,
            are: None,
            gamma: None,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates `are_full` and `γ` on every cell. Cells run in parallel; the
/// output order is that of [`GridSpec::cells`]. A failing cell records its
/// error and does not stop the grid.
pub fn table_grid(spec: &GridSpec) -> Vec<GridCell> {
    spec.cells()
        .into_par_iter()
        .map(|(d, x0, x1)| evaluate_cell(spec, d, x0, x1))
        .collect()
}

/// Grid for the ignore-rule efficiency under MCAR.
#[derive(Debug, Clone, PartialEq)]
pub struct McarGridSpec {
    pub pi1s: Vec<f64>,
    pub deltas: Vec<f64>,
    pub gamma_bar: f64,
    pub p: usize,
}

impl McarGridSpec {
    /// Totally unclassified samples over the reference priors and separations.
    pub fn published() -> Self {
        Self {
            pi1s: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            deltas: vec![1.0, 2.0, 3.0, 4.0],
            gamma_bar: 1.0,
            p: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McarCell {
    pub pi1: f64,
    pub delta: f64,
    pub are: Option<f64>,
    pub error: Option<String>,
}

/// Evaluates `are_ignore_mcar` with `π₁` slowest and `Δ` fastest.
pub fn mcar_grid(spec: &McarGridSpec) -> Vec<McarCell> {
    let cells: Vec<(f64, f64)> = spec
        .pi1s
        .iter()
        .flat_map(|&a| spec.deltas.iter().map(move |&d| (a, d)))
        .collect();
    cells
        .into_par_iter()
        .map(|(pi1, delta)| {
            let r = CanonicalModel::new(delta, pi1, spec.p)
                .and_then(|m| are_ignore_mcar(&m, spec.gamma_bar));
            match r {
                Ok(r) => McarCell {
                    pi1,
                    delta,
                    are: Some(r.are),
                    error: None,
                },
                Err(e) => McarCell {
                    pi1,
                    delta,
                    are: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Spread of `are_full` over a range of priors, for auditing how much the
/// equal-prior tables depend on that assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSensitivity {
    pub pi1s: Vec<f64>,
    pub ares: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn prior_sensitivity(delta: f64, xi: &MissParams, p: usize) -> Result<PriorSensitivity> {
    let pi1s: Vec<f64> = (2..=8).map(|k| k as f64 / 10.0).collect();
    let ares = pi1s
        .iter()
        .map(|&pi1| are_full(&CanonicalModel::new(delta, pi1, p)?, xi).map(|r| r.are))
        .collect::<Result<Vec<_>>>()?;
    let min = ares.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ares.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(PriorSensitivity {
        pi1s,
        ares,
        min,
        max,
    })
}
