//! Log-likelihoods of a partially classified sample and their gradients.
//!
//! Per-record terms are computed independently (in parallel for large
//! samples) and summed with a fixed pairwise order, so a value depends only
//! on the data and parameters, not on the number of worker threads.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::missingness::{FullParams, Mechanism, MissParams};
use crate::model::{ClassLabel, DiscriminantCoeffs, ThetaParams};
use crate::special::{log_add_exp, log_logistic, logistic, pairwise_sum, LN_2PI};
use crate::unconstrained::UnconstrainedVector;

/// Samples at least this large are evaluated on the rayon pool.
const PARALLEL_MIN: usize = 4096;
const LEAF_ROWS: usize = 32;

/// One feature vector with its class label, absent when the label is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub y: Vec<f64>,
    pub label: Option<ClassLabel>,
}

impl Record {
    pub fn labeled(y: Vec<f64>, label: ClassLabel) -> Self {
        Self {
            y,
            label: Some(label),
        }
    }

    pub fn unlabeled(y: Vec<f64>) -> Self {
        Self { y, label: None }
    }

    /// Missing-label indicator `m`.
    pub fn is_missing(&self) -> bool {
        self.label.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    p: usize,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(p: usize, records: Vec<Record>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Dataset(
                "feature dimension must be at least 1".into(),
            ));
        }
        for (i, r) in records.iter().enumerate() {
            if r.y.len() != p {
                return Err(Error::Dataset(format!(
                    "record {i} has {} features, expected {p}",
                    r.y.len()
                )));
            }
            if r.y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!(
                    "record {i} has a non-finite feature"
                )));
            }
        }
        Ok(Self { p, records })
    }

    pub fn empty(p: usize) -> Result<Self> {
        Self::new(p, Vec::new())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn n_unlabeled(&self) -> usize {
        self.records.iter().filter(|r| r.is_missing()).count()
    }

    pub fn n_labeled(&self) -> usize {
        self.n() - self.n_unlabeled()
    }

    /// Sample proportion of missing labels.
    pub fn missing_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.n_unlabeled() as f64 / self.n() as f64
        }
    }

    /// The labeled records only, in their original order.
    pub fn labeled_subset(&self) -> Dataset {
        Dataset {
            p: self.p,
            records: self
                .records
                .iter()
                .filter(|r| !r.is_missing())
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikValue {
    pub value: f64,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
}

/// Which log-likelihood a gradient refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodKind {
    /// Mixture likelihood that ignores the selection mechanism.
    Ignore,
    /// Bernoulli likelihood of the missing-label indicators.
    Miss,
    /// Sum of the two.
    Full,
}

impl LikelihoodKind {
    fn ignore_part(self) -> bool {
        matches!(self, LikelihoodKind::Ignore | LikelihoodKind::Full)
    }

    fn miss_part(self) -> bool {
        matches!(self, LikelihoodKind::Miss | LikelihoodKind::Full)
    }
}

/// Mixture quantities shared by every record.
struct Terms {
    p: usize,
    pi1: f64,
    log_pi: [f64; 2],
    mu: [Vec<f64>; 2],
    /// Σ⁻¹, column-major (symmetric).
    prec: Vec<f64>,
    log_norm: f64,
    beta0: f64,
    beta1: Vec<f64>,
}

impl Terms {
    fn new(
        pi1: f64,
        log_pi: [f64; 2],
        mu1: &[f64],
        mu2: &[f64],
        chol: &DMatrix<f64>,
    ) -> Result<Self> {
        let p = mu1.len();
        let mut log_det = 0.0;
        for i in 0..p {
            let l = chol[(i, i)];
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::DegenerateCovariance { ratio: 0.0 });
            }
            log_det += 2.0 * l.ln();
        }
        let inv_l = chol
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .ok_or(Error::DegenerateCovariance { ratio: 0.0 })?;
        let prec = inv_l.transpose() * &inv_l;
        let prec = (&prec + prec.transpose()) * 0.5;
        let mut beta1 = vec![0.0; p];
        let mut beta0 = log_pi[0] - log_pi[1];
        for i in 0..p {
            let mut b = 0.0;
            for j in 0..p {
                b += prec[(i, j)] * (mu1[j] - mu2[j]);
            }
            beta1[i] = b;
            beta0 -= 0.5 * (mu1[i] + mu2[i]) * b;
        }
        Ok(Self {
            p,
            pi1,
            log_pi,
            mu: [mu1.to_vec(), mu2.to_vec()],
            prec: prec.as_slice().to_vec(),
            log_norm: -0.5 * (p as f64 * LN_2PI + log_det),
            beta0,
            beta1,
        })
    }

    fn from_theta(theta: &ThetaParams) -> Result<Self> {
        let chol = theta
            .sigma()
            .clone()
            .cholesky()
            .ok_or(Error::DegenerateCovariance { ratio: 0.0 })?;
        let pi1 = theta.pi1();
        Self::new(
            pi1,
            [pi1.ln(), theta.pi2().ln()],
            theta.mu1().as_slice(),
            theta.mu2().as_slice(),
            &chol.l(),
        )
    }

    fn from_unconstrained(u: &UnconstrainedVector) -> Result<Self> {
        let a = u.log_odds();
        Self::new(
            logistic(a),
            [log_logistic(a), log_logistic(-a)],
            u.mu1().as_slice(),
            u.mu2().as_slice(),
            &u.chol(),
        )
    }

    /// Width of one gradient row: α, μ₁, μ₂, full p×p Σ-gradient, ξ₀, ξ₁.
    fn grad_width(&self) -> usize {
        1 + 2 * self.p + self.p * self.p + 2
    }

    /// Log-likelihood contribution of one record. When `grad` is given, it
    /// receives the gradient in the natural coordinates listed in
    /// [`Terms::grad_width`].
    fn record(
        &self,
        rec: &Record,
        kind: LikelihoodKind,
        sel: Option<(&MissParams, Mechanism)>,
        grad: Option<&mut [f64]>,
        s: &mut [Vec<f64>; 2],
    ) -> f64 {
        let p = self.p;
        let y = &rec.y;
        let mut quad = [0.0; 2];
        for c in 0..2 {
            for i in 0..p {
                let acc: f64 = y
                    .iter()
                    .zip(&self.mu[c])
                    .enumerate()
                    .map(|(j, (yj, mj))| self.prec[i + j * p] * (yj - mj))
                    .sum();
                s[c][i] = acc;
                quad[c] += (y[i] - self.mu[c][i]) * acc;
            }
        }

        let mut value = 0.0;
        let mut w = [0.0; 2];
        if kind.ignore_part() {
            let l = [
                self.log_pi[0] + self.log_norm - 0.5 * quad[0],
                self.log_pi[1] + self.log_norm - 0.5 * quad[1],
            ];
            match rec.label {
                Some(ClassLabel::One) => {
                    value += l[0];
                    w = [1.0, 0.0];
                }
                Some(ClassLabel::Two) => {
                    value += l[1];
                    w = [0.0, 1.0];
                }
                None => {
                    let v = log_add_exp(l[0], l[1]);
                    value += v;
                    w = [(l[0] - v).exp(), (l[1] - v).exp()];
                }
            }
        }

        let mut sel_terms = None;
        if let (true, Some((xi, mech))) = (kind.miss_part(), sel) {
            let d = self.beta0 + self.beta1.iter().zip(y).map(|(b, x)| b * x).sum::<f64>();
            let eta = xi.linear_predictor(d, mech);
            let m = rec.is_missing();
            let ll = if m {
                log_logistic(eta)
            } else {
                log_logistic(-eta)
            };
            value += if ll.is_nan() { f64::NEG_INFINITY } else { ll };
            let resid = if m { 1.0 } else { 0.0 } - logistic(eta);
            let (dxi1, g) = match mech {
                Mechanism::Mcar => (0.0, 0.0),
                _ => (
                    resid * mech.covariate(d),
                    resid * xi.xi1 * mech.covariate_slope(d),
                ),
            };
            sel_terms = Some((resid, dxi1, g));
        }

        if let Some(out) = grad {
            out.fill(0.0);
            let mu1 = 1;
            let mu2 = 1 + p;
            let sig = 1 + 2 * p;
            let xi_at = sig + p * p;
            if kind.ignore_part() {
                out[0] = w[0] - self.pi1;
                for i in 0..p {
                    out[mu1 + i] = w[0] * s[0][i];
                    out[mu2 + i] = w[1] * s[1][i];
                }
                for j in 0..p {
                    for i in 0..p {
                        let outer = w[0] * s[0][i] * s[0][j] + w[1] * s[1][i] * s[1][j];
                        out[sig + i + j * p] = 0.5 * (outer - self.prec[i + j * p]);
                    }
                }
            }
            if let Some((resid, dxi1, g)) = sel_terms {
                // d = λ + (y − μ̄)ᵀΣ⁻¹(μ₁ − μ₂) with λ the log-odds coordinate.
                out[0] += g;
                for i in 0..p {
                    out[mu1 + i] += g * s[0][i];
                    out[mu2 + i] -= g * s[1][i];
                }
                for j in 0..p {
                    for i in 0..p {
                        let centred = 0.5 * (s[0][i] + s[1][i]);
                        out[sig + i + j * p] -= g * centred * self.beta1[j];
                    }
                }
                out[xi_at] = resid;
                out[xi_at + 1] = dxi1;
            }
        }
        value
    }

    fn sum_values(
        &self,
        data: &Dataset,
        kind: LikelihoodKind,
        sel: Option<(&MissParams, Mechanism)>,
    ) -> f64 {
        let p = self.p;
        let one = |rec: &Record, s: &mut [Vec<f64>; 2]| self.record(rec, kind, sel, None, s);
        let values: Vec<f64> = if data.n() >= PARALLEL_MIN {
            data.records
                .par_iter()
                .map_init(|| [vec![0.0; p], vec![0.0; p]], |s, rec| one(rec, s))
                .collect()
        } else {
            let mut s = [vec![0.0; p], vec![0.0; p]];
            data.records.iter().map(|rec| one(rec, &mut s)).collect()
        };
        pairwise_sum(&values)
    }

    /// Value and natural-coordinate gradient summed over records.
    fn sum_with_grad(
        &self,
        data: &Dataset,
        kind: LikelihoodKind,
        sel: Option<(&MissParams, Mechanism)>,
    ) -> (f64, Vec<f64>) {
        let p = self.p;
        let width = self.grad_width() + 1;
        let mut rows = vec![0.0; data.n() * width];
        let fill = |rec: &Record, row: &mut [f64], s: &mut [Vec<f64>; 2]| {
            let (head, tail) = row.split_at_mut(1);
            head[0] = self.record(rec, kind, sel, Some(tail), s);
        };
        if data.n() >= PARALLEL_MIN {
            rows.par_chunks_mut(width)
                .zip(data.records.par_iter())
                .for_each_init(
                    || [vec![0.0; p], vec![0.0; p]],
                    |s, (row, rec)| fill(rec, row, s),
                );
        } else {
            let mut s = [vec![0.0; p], vec![0.0; p]];
            for (row, rec) in rows.chunks_mut(width).zip(&data.records) {
                fill(rec, row, &mut s);
            }
        }
        let total = reduce_rows(&rows, width, 0, data.n());
        (total[0], total[1..].to_vec())
    }
}

/// Column sums of a row-major table by pairwise splitting over rows.
fn reduce_rows(rows: &[f64], width: usize, lo: usize, hi: usize) -> Vec<f64> {
    if hi - lo <= LEAF_ROWS {
        let mut acc = vec![0.0; width];
        for r in lo..hi {
            for (a, v) in acc.iter_mut().zip(&rows[r * width..(r + 1) * width]) {
                *a += v;
            }
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let mut left = reduce_rows(rows, width, lo, mid);
    let right = reduce_rows(rows, width, mid, hi);
    for (a, b) in left.iter_mut().zip(&right) {
        *a += b;
    }
    left
}

fn check_dim(p: usize, data: &Dataset) -> Result<()> {
    if data.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: data.p(),
        });
    }
    Ok(())
}

fn counts(data: &Dataset, value: f64) -> LogLikValue {
    let n_unlabeled = data.n_unlabeled();
    LogLikValue {
        value,
        n_labeled: data.n() - n_unlabeled,
        n_unlabeled,
    }
}

/// Log-likelihood of a completely classified sample.
pub fn loglik_complete(theta: &ThetaParams, data: &Dataset) -> Result<LogLikValue> {
    check_dim(theta.p(), data)?;
    if let Some(i) = data.records().iter().position(|r| r.is_missing()) {
        return Err(Error::UnlabeledRecord(i));
    }
    let terms = Terms::from_theta(theta)?;
    Ok(counts(
        data,
        terms.sum_values(data, LikelihoodKind::Ignore, None),
    ))
}

/// Log-likelihood that ignores the missing-label mechanism: labeled records
/// contribute their class density, unlabeled records the mixture density.
pub fn loglik_ignore(theta: &ThetaParams, data: &Dataset) -> Result<LogLikValue> {
    check_dim(theta.p(), data)?;
    let terms = Terms::from_theta(theta)?;
    Ok(counts(
        data,
        terms.sum_values(data, LikelihoodKind::Ignore, None),
    ))
}

/// Bernoulli log-likelihood of the missing-label indicators.
///
/// Terms are evaluated in log space; a record whose label status is
/// impossible under the supplied parameters contributes `-inf`, which is
/// returned as the value rather than as an error. This function is not
/// meant to be maximized on its own: `β` and `ξ` are not jointly identified
/// from the indicators alone.
pub fn loglik_miss(
    beta: &DiscriminantCoeffs,
    xi: &MissParams,
    data: &Dataset,
    mechanism: Mechanism,
) -> Result<LogLikValue> {
    check_dim(beta.p(), data)?;
    let values: Vec<f64> = data
        .records()
        .iter()
        .map(|r| {
            let d = beta.discriminant(&r.y)?;
            let eta = xi.linear_predictor(d, mechanism);
            let ll = if r.is_missing() {
                log_logistic(eta)
            } else {
                log_logistic(-eta)
            };
            Ok(if ll.is_nan() { f64::NEG_INFINITY } else { ll })
        })
        .collect::<Result<_>>()?;
    Ok(counts(data, pairwise_sum(&values)))
}

/// Full log-likelihood: the ignore term plus the selection term, with `β`
/// recomputed from `θ`.
pub fn loglik_full(psi: &FullParams, data: &Dataset) -> Result<LogLikValue> {
    check_dim(psi.theta.p(), data)?;
    let terms = Terms::from_theta(&psi.theta)?;
    let value = terms.sum_values(data, LikelihoodKind::Full, Some((&psi.xi, psi.mechanism)));
    Ok(counts(data, value))
}

/// Selected log-likelihood at a point given in unconstrained coordinates.
pub fn loglik_unconstrained(
    psi: &UnconstrainedVector,
    data: &Dataset,
    kind: LikelihoodKind,
    mechanism: Mechanism,
) -> Result<f64> {
    check_dim(psi.p(), data)?;
    let terms = Terms::from_unconstrained(psi)?;
    let xi = selection(psi, kind)?;
    Ok(terms.sum_values(data, kind, xi.as_ref().map(|x| (x, mechanism))))
}

fn selection(psi: &UnconstrainedVector, kind: LikelihoodKind) -> Result<Option<MissParams>> {
    match (kind, psi.xi()) {
        (LikelihoodKind::Ignore, _) => Ok(None),
        (_, Some(xi)) => Ok(Some(xi)),
        (_, None) => Err(Error::InvalidParameter(
            "selection likelihood needs the selection coordinates".into(),
        )),
    }
}

/// Value and gradient of the selected log-likelihood with respect to the
/// unconstrained coordinates of `psi`. When `psi` carries selection
/// coordinates and `kind` is [`LikelihoodKind::Ignore`], their components
/// are zero.
pub fn loglik_and_grad(
    psi: &UnconstrainedVector,
    data: &Dataset,
    kind: LikelihoodKind,
    mechanism: Mechanism,
) -> Result<(f64, Vec<f64>)> {
    check_dim(psi.p(), data)?;
    let terms = Terms::from_unconstrained(psi)?;
    let xi = selection(psi, kind)?;
    let (value, natural) = terms.sum_with_grad(data, kind, xi.as_ref().map(|x| (x, mechanism)));
    if !value.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }

    let p = psi.p();
    let mut grad = vec![0.0; psi.len()];
    grad[..1 + 2 * p].copy_from_slice(&natural[..1 + 2 * p]);

    // Σ = LLᵀ: ∂/∂L = (G + Gᵀ)L on the lower triangle, diagonal on log scale.
    let sig = 1 + 2 * p;
    let g = DMatrix::from_column_slice(p, p, &natural[sig..sig + p * p]);
    let l = psi.chol();
    let dl = (&g + g.transpose()) * &l;
    let mut k = psi.chol_offset();
    for i in 0..p {
        for j in 0..=i {
            grad[k] = if i == j {
                dl[(i, i)] * l[(i, i)]
            } else {
                dl[(i, j)]
            };
            k += 1;
        }
    }
    if psi.has_xi() && kind != LikelihoodKind::Ignore {
        let at = sig + p * p;
        grad[k] = natural[at];
        grad[k + 1] = natural[at + 1];
    }
    Ok((value, grad))
}

/// Gradient of the selected log-likelihood with respect to the unconstrained
/// coordinates.
pub fn grad_loglik(
    psi: &UnconstrainedVector,
    data: &Dataset,
    kind: LikelihoodKind,
    mechanism: Mechanism,
) -> Result<Vec<f64>> {
    loglik_and_grad(psi, data, kind, mechanism).map(|(_, g)| g)
}
