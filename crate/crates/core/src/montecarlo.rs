//! Replicated simulation of the error-rate comparison between a rule fitted
//! to completely classified data and one fitted by full likelihood to the
//! same data with labels withheld by the selection model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{fit_complete, fit_full, FitConfig};
use crate::likelihood::{Dataset, Record};
use crate::missingness::{Mechanism, MissParams};
use crate::model::{
    beta_from_theta, conditional_error, optimal_error, CanonicalModel, ClassLabel, ThetaParams,
};

/// Failure share above which a run is flagged.
pub const FAILURE_FLAG_FRACTION: f64 = 0.05;
/// Stream reserved for the bootstrap so it never overlaps a replicate.
const BOOTSTRAP_STREAM: u64 = u64::MAX;
const MAX_BOOTSTRAP_REDRAWS: usize = 1_000_000;

fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Hidden quantities behind a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTruth {
    pub labels: Vec<ClassLabel>,
    pub missing: Vec<bool>,
    /// True discriminant value of each record.
    pub discriminant: Vec<f64>,
}

impl DatasetTruth {
    /// The dataset with every label restored.
    pub fn complete(&self, data: &Dataset) -> Result<Dataset> {
        let records = data
            .records()
            .iter()
            .zip(&self.labels)
            .map(|(r, &l)| Record::labeled(r.y.clone(), l))
            .collect();
        Dataset::new(data.p(), records)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub data: Dataset,
    pub truth: DatasetTruth,
}

fn generate(
    model: &CanonicalModel,
    xi: &MissParams,
    mechanism: Mechanism,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> GeneratedData {
    let p = model.p();
    let beta = model.beta();
    let half = 0.5 * model.delta();
    let mut records = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut missing = Vec::with_capacity(n);
    let mut discriminant = Vec::with_capacity(n);
    for _ in 0..n {
        let label = if rng.random::<f64>() < model.pi1() {
            ClassLabel::One
        } else {
            ClassLabel::Two
        };
        let mut y: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        y[0] += if label == ClassLabel::One {
            half
        } else {
            -half
        };
        let d = beta.beta0 + beta.beta1.iter().zip(&y).map(|(b, v)| b * v).sum::<f64>();
        let m = rng.random::<f64>() < xi.q_from_discriminant(d, mechanism);
        records.push(if m {
            Record::unlabeled(y)
        } else {
            Record::labeled(y, label)
        });
        labels.push(label);
        missing.push(m);
        discriminant.push(d);
    }
    GeneratedData {
        data: Dataset::new(p, records).expect("generated records have dimension p"),
        truth: DatasetTruth {
            labels,
            missing,
            discriminant,
        },
    }
}

/// Draws `n` records from the canonical model and withholds labels with the
/// selection probability of each record's true discriminant value.
pub fn gen_dataset(
    model: &CanonicalModel,
    xi: &MissParams,
    mechanism: Mechanism,
    n: usize,
    seed: u64,
) -> GeneratedData {
    generate(model, xi, mechanism, n, &mut replicate_rng(seed, 0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: CanonicalModel,
    pub xi: MissParams,
    pub mechanism: Mechanism,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub fit: FitConfig,
    /// Keep replicates whose full-likelihood fit hit the iteration limit,
    /// using the best parameters found. Such fits are excluded by default.
    pub keep_unconverged: bool,
}

impl SimConfig {
    pub fn new(
        model: CanonicalModel,
        xi: MissParams,
        n: usize,
        replications: usize,
        seed: u64,
    ) -> Self {
        Self {
            model,
            xi,
            mechanism: Mechanism::DiscriminantSquare,
            n,
            replications,
            seed,
            bootstrap_resamples: 1000,
            fit: FitConfig::default(),
            keep_unconverged: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 20 {
            return Err(Error::InvalidParameter(format!(
                "sample size must be at least 20, got {}",
                self.n
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter(
                "at least one replication is required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    /// Conditional error of the rule fitted to the fully labeled sample.
    pub err_complete: Option<f64>,
    /// Conditional error of the full-likelihood rule on the partial sample.
    pub err_full: Option<f64>,
    /// The full-likelihood fit converged, or was kept regardless.
    pub full_converged: bool,
    pub missing_fraction: f64,
}

impl ReplicateOutcome {
    /// The pair of conditional errors when both fits succeeded.
    pub fn pair(&self) -> Option<(f64, f64)> {
        match (self.err_complete, self.err_full, self.full_converged) {
            (Some(c), Some(f), true) => Some((c, f)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub replicates: Vec<ReplicateOutcome>,
    pub optimal_error: f64,
    /// Ratio of mean excess errors, complete over full. `NaN` when no
    /// replicate succeeded.
    pub re_hat: f64,
    pub bootstrap_se: f64,
    pub bootstrap_redraws: usize,
    pub n_failed: usize,
    /// More than 5% of replicates failed.
    pub flagged: bool,
}

impl SimResult {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.replicates
            .iter()
            .filter_map(ReplicateOutcome::pair)
            .collect()
    }

    pub fn excess_pairs(&self) -> Vec<(f64, f64)> {
        self.pairs()
            .into_iter()
            .map(|(c, f)| (c - self.optimal_error, f - self.optimal_error))
            .collect()
    }

    pub fn mean_missing_fraction(&self) -> f64 {
        self.replicates
            .iter()
            .map(|r| r.missing_fraction)
            .sum::<f64>()
            / self.replicates.len() as f64
    }
}

fn run_one(config: &SimConfig, index: usize) -> ReplicateOutcome {
    let mut rng = replicate_rng(config.seed, index as u64);
    let generated = generate(
        &config.model,
        &config.xi,
        config.mechanism,
        config.n,
        &mut rng,
    );
    let missing_fraction = generated.data.missing_fraction();
    let err_of = |theta: &ThetaParams| {
        beta_from_theta(theta)
            .and_then(|b| conditional_error(&b, &config.model))
            .ok()
    };

    let err_complete = generated
        .truth
        .complete(&generated.data)
        .and_then(|d| fit_complete(&d))
        .ok()
        .and_then(|t| err_of(&t));
    let fit_config = FitConfig {
        mechanism: config.mechanism,
        seed: config.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ..config.fit.clone()
    };
    let (err_full, full_converged) = match fit_full(&generated.data, None, &fit_config) {
        Ok(fit) => (
            err_of(&fit.theta_hat),
            fit.converged || config.keep_unconverged,
        ),
        Err(_) => (None, false),
    };
    ReplicateOutcome {
        index,
        err_complete,
        err_full,
        full_converged,
        missing_fraction,
    }
}

fn ratio_of_means(pairs: &[(f64, f64)], idx: impl Iterator<Item = usize>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in idx {
        num += pairs[i].0;
        den += pairs[i].1;
    }
    (den > 0.0 && num.is_finite()).then(|| num / den)
}

/// Ratio of mean excess errors over `(complete, full)` excess-error pairs.
pub fn relative_efficiency(excess_pairs: &[(f64, f64)]) -> Option<f64> {
    ratio_of_means(excess_pairs, 0..excess_pairs.len())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSe {
    pub se: f64,
    /// Resamples drawn again because their denominator was not positive.
    pub redraws: usize,
}

/// Bootstrap standard error of the relative efficiency, resampling whole
/// pairs with replacement. The spread uses divisor `resamples - 1`.
pub fn bootstrap_se(
    excess_pairs: &[(f64, f64)],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSe> {
    let b = excess_pairs.len();
    if b < 2 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least 2 replicates, got {b}"
        )));
    }
    if resamples < 2 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least 2 resamples, got {resamples}"
        )));
    }
    let mut rng = replicate_rng(seed, BOOTSTRAP_STREAM);
    let mut values = Vec::with_capacity(resamples);
    let mut redraws = 0;
    let mut idx = vec![0usize; b];
    while values.len() < resamples {
        idx.iter_mut().for_each(|i| *i = rng.random_range(0..b));
        match ratio_of_means(excess_pairs, idx.iter().copied()) {
            Some(v) => values.push(v),
            None => {
                redraws += 1;
                if redraws > MAX_BOOTSTRAP_REDRAWS {
                    return Err(Error::InvalidParameter(
                        "bootstrap denominators are never positive".into(),
                    ));
                }
            }
        }
    }
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(BootstrapSe {
        se: var.sqrt(),
        redraws,
    })
}

/// Runs the replicates in parallel and reduces them in index order, so the
/// result does not depend on the number of worker threads.
pub fn run_replications(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let replicates: Vec<ReplicateOutcome> = (0..config.replications)
        .into_par_iter()
        .map(|r| run_one(config, r))
        .collect();
    let optimal = optimal_error(&config.model);
    let n_failed = replicates.iter().filter(|r| r.pair().is_none()).count();
    let excess: Vec<(f64, f64)> = replicates
        .iter()
        .filter_map(ReplicateOutcome::pair)
        .map(|(c, f)| (c - optimal, f - optimal))
        .collect();
    let re_hat = relative_efficiency(&excess).unwrap_or(f64::NAN);
    let (bootstrap_se, bootstrap_redraws) =
        match bootstrap_se(&excess, config.bootstrap_resamples, config.seed) {
            Ok(b) => (b.se, b.redraws),
            Err(_) => (f64::NAN, 0),
        };
    Ok(SimResult {
        flagged: n_failed as f64 > FAILURE_FLAG_FRACTION * config.replications as f64,
        replicates,
        optimal_error: optimal,
        re_hat,
        bootstrap_se,
        bootstrap_redraws,
        n_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_replicates_have_zero_se() {
        let pairs = vec![(0.02, 0.01); 10];
        let b = bootstrap_se(&pairs, 200, 1).unwrap();
        assert_eq!(b.se, 0.0);
        assert_eq!(b.redraws, 0);
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let pairs: Vec<_> = (0..30)
            .map(|i| (0.01 + 0.001 * i as f64, 0.005 + 0.0003 * (i % 7) as f64))
            .collect();
        assert_eq!(
            bootstrap_se(&pairs, 300, 9).unwrap(),
            bootstrap_se(&pairs, 300, 9).unwrap()
        );
    }

    #[test]
    fn degenerate_resamples_are_redrawn() {
        let pairs = vec![(1.0, 0.0), (2.0, 1.0)];
        let b = bootstrap_se(&pairs, 500, 3).unwrap();
        assert!(b.redraws > 0);
    }

    #[test]
    fn mcar_missing_rate() {
        let model = CanonicalModel::new(2.0, 0.5, 1).unwrap();
        let xi = MissParams::new(0.4, 0.0).unwrap();
        let n = 20_000;
        let g = gen_dataset(&model, &xi, Mechanism::DiscriminantSquare, n, 5);
        let q = crate::special::logistic(0.4);
        let sd = (q * (1.0 - q) / n as f64).sqrt();
        assert!((g.data.missing_fraction() - q).abs() < 3.0 * sd);
    }

    #[test]
    fn generation_is_deterministic() {
        let model = CanonicalModel::new(1.0, 0.3, 2).unwrap();
        let xi = MissParams::new(1.0, -2.0).unwrap();
        let a = gen_dataset(&model, &xi, Mechanism::DiscriminantSquare, 200, 11);
        let b = gen_dataset(&model, &xi, Mechanism::DiscriminantSquare, 200, 11);
        assert_eq!(a, b);
    }
}
