//! Expectations over the univariate two-component normal mixture
//! `f(y) = π₁ φ(y; Δ/2, 1) + π₂ φ(y; −Δ/2, 1)`.
//!
//! Each component is integrated with Gauss–Hermite rules of 150 nodes,
//! doubled up to four times until successive estimates agree to a relative
//! tolerance. Integrands with features narrower than the node spacing (the
//! selection probability for large `|ξ₁|` is one) are handed to an adaptive
//! Gauss–Kronrod rule on a truncated interval instead.
//!
//! Convergence is decided per integrand, so a value does not depend on which
//! other integrands were evaluated alongside it.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::special::std_normal_pdf;

pub const BASE_NODES: usize = 150;
pub const MAX_DOUBLINGS: usize = 4;
pub const REL_TOL: f64 = 1e-10;

/// Half-width added beyond the component means when truncating the real line.
const TAIL_SIGMAS: f64 = 15.0;
const INITIAL_PANELS: usize = 64;
const MAX_PANELS: usize = 20_000;

/// Gauss–Hermite nodes and weights for `∫ e^{-x²} g(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes are bracketed by Sturm-sequence bisection on the Jacobi matrix
    /// and polished by Newton iteration on the orthonormal Hermite
    /// recurrence. The recurrence is rescaled on the fly so large rules do
    /// not overflow; the outermost weights underflow to zero, which is
    /// harmless.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let m = n.div_ceil(2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut hi = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
        for i in 0..m {
            let z = if n % 2 == 1 && i == m - 1 {
                0.0
            } else {
                let mut lo = 0.0;
                let mut upper = hi;
                while upper - lo > 1e-8 * upper.max(1.0) {
                    let mid = 0.5 * (lo + upper);
                    if count_above(n, mid) > i {
                        lo = mid;
                    } else {
                        upper = mid;
                    }
                }
                let mut z = 0.5 * (lo + upper);
                for _ in 0..20 {
                    let (p1, pp, _) = hermite_eval(n, z, pim4);
                    let step = p1 / pp;
                    z -= step;
                    if step.abs() <= 1e-15 * z.abs().max(1.0) {
                        break;
                    }
                }
                z
            };
            let (_, pp, log_scale) = hermite_eval(n, z, pim4);
            let log_pp = pp.abs().ln() + log_scale;
            let w = (std::f64::consts::LN_2 - 2.0 * log_pp).exp();
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = w;
            weights[n - 1 - i] = w;
            hi = z;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Number of zeros of the degree-`n` Hermite polynomial above `x`, from the
/// Sturm sequence of its Jacobi matrix.
fn count_above(n: usize, x: f64) -> usize {
    let mut below = 0;
    let mut q = -x;
    if q < 0.0 {
        below += 1;
    }
    for j in 1..n {
        let b2 = 0.5 * j as f64;
        let prev = if q == 0.0 { f64::MIN_POSITIVE } else { q };
        q = -x - b2 / prev;
        if q < 0.0 {
            below += 1;
        }
    }
    n - below
}

/// Orthonormal Hermite `p_n(z)` and `p_n'(z)` up to the common factor
/// `exp(log_scale)`.
fn hermite_eval(n: usize, z: f64, pim4: f64) -> (f64, f64, f64) {
    const BIG: f64 = 1e150;
    let mut p1 = pim4;
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > BIG {
            p1 /= BIG;
            p2 /= BIG;
            log_scale += BIG.ln();
        }
    }
    let pp = (2.0 * n as f64).sqrt() * p2;
    (p1, pp, log_scale)
}

fn rule(level: usize) -> &'static GaussHermite {
    static RULES: [OnceLock<GaussHermite>; MAX_DOUBLINGS + 1] =
        [const { OnceLock::new() }; MAX_DOUBLINGS + 1];
    RULES[level].get_or_init(|| GaussHermite::new(BASE_NODES << level))
}

/// `E_{N(μ,1)} g` and `E_{N(μ,1)} |g|` for each of `K` integrands.
fn gh_normal<const K: usize>(
    gh: &GaussHermite,
    mu: f64,
    g: &impl Fn(f64) -> [f64; K],
) -> ([f64; K], [f64; K]) {
    let mut sum = [0.0; K];
    let mut abs = [0.0; K];
    let scale = std::f64::consts::SQRT_2;
    for (&x, &w) in gh.nodes.iter().zip(&gh.weights) {
        if w == 0.0 {
            continue;
        }
        let v = g(mu + scale * x);
        for k in 0..K {
            sum[k] += w * v[k];
            abs[k] += w * v[k].abs();
        }
    }
    let norm = std::f64::consts::PI.sqrt().recip();
    for k in 0..K {
        sum[k] *= norm;
        abs[k] *= norm;
    }
    (sum, abs)
}

/// `∫ g(y) f(y) dy` for the canonical univariate mixture with separation
/// `delta` and class-1 prior `pi1`.
pub fn mixture_expectation(g: impl Fn(f64) -> f64, delta: f64, pi1: f64) -> Result<f64> {
    let [v] = mixture_expectations(|y| [g(y)], delta, pi1)?;
    Ok(v)
}

/// Vector form of [`mixture_expectation`].
pub fn mixture_expectations<const K: usize>(
    g: impl Fn(f64) -> [f64; K],
    delta: f64,
    pi1: f64,
) -> Result<[f64; K]> {
    let half = 0.5 * delta;
    let pi2 = 1.0 - pi1;
    let eval = |level: usize| {
        let gh = rule(level);
        let (s1, a1) = gh_normal(gh, half, &g);
        let (s2, a2) = gh_normal(gh, -half, &g);
        let mut s = [0.0; K];
        let mut a = [0.0; K];
        for k in 0..K {
            s[k] = pi1 * s1[k] + pi2 * s2[k];
            a[k] = pi1 * a1[k] + pi2 * a2[k];
        }
        (s, a)
    };

    let mut out = [0.0; K];
    let mut done = [false; K];
    let mut last_change = [f64::INFINITY; K];
    let (mut prev, _) = eval(0);
    for level in 1..=MAX_DOUBLINGS {
        let (cur, abs) = eval(level);
        for k in 0..K {
            if done[k] {
                continue;
            }
            let change = (cur[k] - prev[k]).abs();
            last_change[k] = change;
            if change <= REL_TOL * abs[k] {
                out[k] = cur[k];
                done[k] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return Ok(out);
        }
        prev = cur;
    }

    for k in 0..K {
        if done[k] {
            continue;
        }
        let component = |y: f64| g(y)[k];
        out[k] = adaptive_mixture(&component, delta, pi1).map_err(|e| match e {
            Error::QuadratureAccuracy { estimate, .. } => Error::QuadratureAccuracy {
                estimate,
                change: last_change[k],
            },
            other => other,
        })?;
    }
    Ok(out)
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    abs: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod_panel(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Panel {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut a = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        k += WGK[j] * (f1 + f2);
        a += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    Panel {
        lo,
        hi,
        value: k * h,
        abs: a * h,
        err: ((k - g) * h).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod integration of `g(y) f(y)` over the
/// mixture support truncated at `TAIL_SIGMAS` beyond the component means.
pub(crate) fn adaptive_mixture(g: &impl Fn(f64) -> f64, delta: f64, pi1: f64) -> Result<f64> {
    let half = 0.5 * delta;
    let pi2 = 1.0 - pi1;
    let f = |y: f64| {
        let dens = pi1 * std_normal_pdf(y - half) + pi2 * std_normal_pdf(y + half);
        if dens == 0.0 {
            0.0
        } else {
            g(y) * dens
        }
    };
    let lo = -half - TAIL_SIGMAS;
    let hi = half + TAIL_SIGMAS;
    let width = (hi - lo) / INITIAL_PANELS as f64;
    let mut heap = BinaryHeap::with_capacity(4 * INITIAL_PANELS);
    for i in 0..INITIAL_PANELS {
        let a = lo + i as f64 * width;
        heap.push(kronrod_panel(&f, a, a + width));
    }
    loop {
        let (value, abs, err) = heap.iter().fold((0.0, 0.0, 0.0), |(v, a, e), p| {
            (v + p.value, a + p.abs, e + p.err)
        });
        if err <= REL_TOL * abs || err <= f64::MIN_POSITIVE {
            // Sum in interval order so the result does not depend on heap layout.
            let mut panels: Vec<Panel> = heap.into_vec();
            panels.sort_by(|x, y| x.lo.total_cmp(&y.lo));
            return Ok(panels.iter().map(|p| p.value).sum());
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureAccuracy {
                estimate: value,
                change: err,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            return Err(Error::QuadratureAccuracy {
                estimate: value,
                change: err,
            });
        }
        heap.push(kronrod_panel(&f, worst.lo, mid));
        heap.push(kronrod_panel(&f, mid, worst.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_rules_integrate_moments() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for level in 0..=MAX_DOUBLINGS {
            let gh = rule(level);
            let w0: f64 = gh.weights().iter().sum();
            let w2: f64 = gh
                .nodes()
                .iter()
                .zip(gh.weights())
                .map(|(x, w)| w * x * x)
                .sum();
            let w4: f64 = gh
                .nodes()
                .iter()
                .zip(gh.weights())
                .map(|(x, w)| w * x.powi(4))
                .sum();
            assert_relative_eq!(w0, sqrt_pi, max_relative = 1e-12);
            assert_relative_eq!(w2, sqrt_pi / 2.0, max_relative = 1e-12);
            assert_relative_eq!(w4, 3.0 * sqrt_pi / 4.0, max_relative = 1e-12);
            assert!(
                gh.nodes().windows(2).all(|w| w[0] > w[1]),
                "level {level} nodes not distinct"
            );
        }
    }

    #[test]
    fn small_rule_matches_known_nodes() {
        let gh = GaussHermite::new(3);
        assert_relative_eq!(gh.nodes()[0], 1.224_744_871_391_589, max_relative = 1e-13);
        assert_eq!(gh.nodes()[1], 0.0);
        assert_relative_eq!(gh.weights()[1], 1.181_635_900_603_677, max_relative = 1e-12);
    }

    #[test]
    fn mixture_moments() {
        assert_relative_eq!(
            mixture_expectation(|_| 1.0, 2.0, 0.3).unwrap(),
            1.0,
            max_relative = 1e-13
        );
        assert!(mixture_expectation(|y| y, 2.0, 0.5).unwrap().abs() < 1e-14);
        assert_relative_eq!(
            mixture_expectation(|y| y * y, 2.0, 0.5).unwrap(),
            2.0,
            max_relative = 1e-13
        );
        // Mean π₁Δ/2 − π₂Δ/2 for unequal priors.
        assert_relative_eq!(
            mixture_expectation(|y| y, 3.0, 0.2).unwrap(),
            -0.9,
            max_relative = 1e-13
        );
    }

    #[test]
    fn sharp_integrand_agrees_with_adaptive_rule() {
        // Narrow logistic window around the boundary.
        let g = |y: f64| crate::special::logistic(3.0 - 10.0 * (3.0 * y).powi(2));
        let via_gh = mixture_expectation(g, 3.0, 0.5).unwrap();
        let direct = adaptive_mixture(&g, 3.0, 0.5).unwrap();
        assert_relative_eq!(via_gh, direct, max_relative = 1e-9);
        assert!(via_gh > 0.0 && via_gh < 1.0);
    }

    #[test]
    fn adaptive_agrees_with_hermite_on_smooth_integrand() {
        let g = |y: f64| (0.3 * y).cos() * y * y;
        let a = adaptive_mixture(&g, 1.5, 0.35).unwrap();
        let b = mixture_expectation(g, 1.5, 0.35).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
}
