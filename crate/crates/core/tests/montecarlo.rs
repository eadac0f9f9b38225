use infomiss::{
    bootstrap_se, gamma, gen_dataset, optimal_error, run_replications, CanonicalModel, Mechanism,
    MissParams, SimConfig,
};

fn mean_abs(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v.abs(), c + 1));
    sum / count as f64
}

#[test]
fn steep_selection_hides_labels_near_the_boundary() {
    let model = CanonicalModel::new(2.0, 0.5, 2).unwrap();
    let generated = gen_dataset(
        &model,
        &MissParams::new(3.0, -10.0).unwrap(),
        Mechanism::DiscriminantSquare,
        2000,
        21,
    );
    let truth = &generated.truth;
    let pick = |missing: bool| {
        mean_abs(
            truth
                .discriminant
                .iter()
                .zip(&truth.missing)
                .filter(|(_, &m)| m == missing)
                .map(|(d, _)| *d),
        )
    };
    let (hidden, shown) = (pick(true), pick(false));
    assert!(
        hidden < 0.5 && shown > 1.5,
        "mean |d| {hidden} among missing, {shown} among labeled"
    );
}

#[test]
fn missing_fraction_matches_gamma() {
    for (delta, xi0, xi1) in [(1.0, 1.0, -1.0), (3.0, 3.0, -5.0)] {
        let model = CanonicalModel::new(delta, 0.5, 1).unwrap();
        let xi = MissParams::new(xi0, xi1).unwrap();
        let n = 50_000;
        let fraction = gen_dataset(&model, &xi, Mechanism::DiscriminantSquare, n, 22)
            .data
            .missing_fraction();
        let g = gamma(&model, &xi, Mechanism::DiscriminantSquare).unwrap();
        let sd = (g * (1.0 - g) / n as f64).sqrt();
        assert!((fraction - g).abs() < 3.0 * sd, "{fraction} vs {g}");
    }
}

/// Bootstrap SE against the exact distribution over all equally likely
/// resamples of three pairs, conditional on a positive denominator.
#[test]
fn bootstrap_matches_exhaustive_enumeration() {
    let pairs = [(0.02, 0.01), (0.05, 0.0), (0.01, 0.03)];
    let mut values = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let num: f64 = [a, b, c].iter().map(|&i| pairs[i].0).sum();
                let den: f64 = [a, b, c].iter().map(|&i| pairs[i].1).sum();
                if den > 0.0 {
                    values.push(num / den);
                }
            }
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let exact =
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();

    let boot = bootstrap_se(&pairs, 200_000, 5).unwrap();
    assert!(
        (boot.se - exact).abs() < 0.01 * exact,
        "{} vs {exact}",
        boot.se
    );
    // One resample in 27 has a zero denominator.
    let expected = 200_000.0 / 26.0;
    assert!(
        (boot.redraws as f64 - expected).abs() < 4.0 * expected.sqrt(),
        "{} redraws",
        boot.redraws
    );
}

#[test]
fn uninformative_selection_costs_efficiency() {
    let model = CanonicalModel::new(2.0, 0.5, 1).unwrap();
    let mut config = SimConfig::new(model, MissParams::new(1.0, 0.0).unwrap(), 200, 200, 23);
    config.bootstrap_resamples = 200;
    let result = run_replications(&config).unwrap();
    assert!(
        result.re_hat + 3.0 * result.bootstrap_se < 1.0,
        "{} ± {}",
        result.re_hat,
        result.bootstrap_se
    );
}

#[test]
fn replicate_errors_never_beat_bayes() {
    let model = CanonicalModel::new(1.0, 0.5, 1).unwrap();
    let mut config = SimConfig::new(model, MissParams::new(2.0, -2.0).unwrap(), 100, 40, 24);
    config.bootstrap_resamples = 50;
    let result = run_replications(&config).unwrap();
    let opt = optimal_error(&model);
    for (c, f) in result.pairs() {
        assert!(c >= opt - 1e-15 && f >= opt - 1e-15);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let model = CanonicalModel::new(2.0, 0.5, 1).unwrap();
    let mut config = SimConfig::new(model, MissParams::new(3.0, -1.0).unwrap(), 100, 24, 25);
    config.bootstrap_resamples = 100;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_replications(&config).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.pairs(), four.pairs());
    assert_eq!(one.re_hat.to_bits(), four.re_hat.to_bits());
    assert_eq!(one.bootstrap_se.to_bits(), four.bootstrap_se.to_bits());
}
