//! Dense BFGS minimizer with a backtracking (Armijo) line search.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Converged when the gradient sup-norm is at most this.
    pub grad_tol: f64,
    /// Longest coordinate move allowed in one step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            max_step: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl BfgsOutcome {
    pub fn gradient_norm(&self) -> f64 {
        sup_norm(&self.gradient)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Minimizes `f`, which returns the value and gradient or `None` where the
/// objective is undefined. Every accepted step satisfies the sufficient
/// decrease condition, so the objective never increases.
///
/// Returns `None` if `f` is undefined at the starting point.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Option<BfgsOutcome>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) =
        f(x.as_slice()).filter(|(v, g)| v.is_finite() && g.iter().all(|c| c.is_finite()))?;
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if sup_norm(g.as_slice()) <= opts.grad_tol {
            return Some(BfgsOutcome {
                x: x.as_slice().to_vec(),
                value: fx,
                gradient: g.as_slice().to_vec(),
                iterations,
                converged: true,
            });
        }
        iterations += 1;

        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            h.fill_with_identity();
            fresh = true;
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        let longest = sup_norm(dir.as_slice());
        if longest > opts.max_step {
            dir *= opts.max_step / longest;
            slope = g.dot(&dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &x + &dir * step;
            if let Some((ft, gt)) = f(trial.as_slice()) {
                if ft.is_finite()
                    && gt.iter().all(|c| c.is_finite())
                    && ft <= fx + ARMIJO * step * slope
                {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                break;
            }
            // Curvature estimate is stale: fall back to steepest descent once.
            h.fill_with_identity();
            fresh = true;
            continue;
        };

        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                // Scale the identity to the observed curvature before the first update.
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ, expanded.
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    let converged = sup_norm(g.as_slice()) <= opts.grad_tol;
    Some(BfgsOutcome {
        x: x.as_slice().to_vec(),
        value: fx,
        gradient: g.as_slice().to_vec(),
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Some((v, g))
        };
        let out = minimize(f, &[-1.2, 1.0], &BfgsOptions::default()).unwrap();
        assert!(out.converged, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn objective_never_increases() {
        let mut seen = Vec::new();
        let f = |x: &[f64]| {
            let v = x[0].powi(4) + (x[1] - 2.0).powi(2) + x[0] * x[1];
            Some((
                v,
                vec![4.0 * x[0].powi(3) + x[1], 2.0 * (x[1] - 2.0) + x[0]],
            ))
        };
        let mut recorder = |x: &[f64]| {
            let r = f(x);
            seen.push(r.as_ref().unwrap().0);
            r
        };
        let out = minimize(&mut recorder, &[3.0, -3.0], &BfgsOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.value <= seen[0]);
    }

    #[test]
    fn undefined_start_is_reported() {
        let f = |_: &[f64]| None;
        assert!(minimize(f, &[0.0], &BfgsOptions::default()).is_none());
    }
}
