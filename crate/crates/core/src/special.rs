//! Scalar helpers shared by the model, likelihood and information code.

use libm::erfc;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Logistic function, evaluated on the branch that cannot overflow.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log logistic(x)`.
#[inline]
pub fn log_logistic(x: f64) -> f64 {
    -softplus(-x)
}

/// Inverse of [`logistic`].
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Binary entropy of the posterior pair `(tau, 1 - tau)` written in terms of
/// the log-odds `d`, with `0 log 0 = 0`.
pub fn entropy_from_logodds(d: f64) -> f64 {
    if !d.is_finite() {
        return 0.0;
    }
    let t1 = logistic(d);
    let t2 = logistic(-d);
    // -t1 log t1 - t2 log t2, using log t1 = -softplus(-d), log t2 = -softplus(d)
    t1 * softplus(-d) + t2 * softplus(d)
}

/// Pairwise summation with a fixed split order, so a sum of a given slice is
/// the same no matter how its terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logistic_saturates_without_nan() {
        assert_eq!(logistic(0.0), 0.5);
        let lo = logistic(-800.0);
        assert!((0.0..1e-300).contains(&lo));
        assert_eq!(logistic(800.0), 1.0);
        assert!(log_logistic(-800.0).is_finite());
        assert_relative_eq!(log_logistic(-800.0), -800.0, max_relative = 1e-12);
    }

    #[test]
    fn entropy_matches_direct_formula() {
        let d: f64 = 2.0;
        let t = 1.0 / (1.0 + (-d).exp());
        let direct = -t * t.ln() - (1.0 - t) * (1.0 - t).ln();
        assert_relative_eq!(entropy_from_logodds(d), direct, max_relative = 1e-14);
        assert_relative_eq!(
            entropy_from_logodds(0.0),
            std::f64::consts::LN_2,
            max_relative = 1e-15
        );
        assert!(entropy_from_logodds(1e6) < 1e-300);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_relative_eq!(
            std_normal_cdf(-1.0),
            0.158_655_253_931_457_05,
            max_relative = 1e-13
        );
        assert_relative_eq!(std_normal_cdf(0.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.25).collect();
        assert_eq!(pairwise_sum(&xs), 124_875.0);
    }
}
