use infomiss::information::{info_cc_beta, info_full_beta, info_ig_beta};
use infomiss::{
    beta_from_theta, conditional_error, fit_complete, fit_full, fit_ignore, gen_dataset,
    CanonicalModel, ClassLabel, Dataset, DiscriminantCoeffs, FitConfig, Mechanism, MissParams,
    Record,
};
use nalgebra::DMatrix;

fn assert_within_se(
    hat: &DiscriminantCoeffs,
    truth: &DiscriminantCoeffs,
    info: &DMatrix<f64>,
    n: usize,
) {
    let cov = info.clone().try_inverse().unwrap() / n as f64;
    let (hat, truth) = (hat.to_vec(), truth.to_vec());
    for k in 0..hat.len() {
        let se = cov[(k, k)].sqrt();
        assert!(
            (hat[k] - truth[k]).abs() < 3.5 * se,
            "coordinate {k}: {} vs {} (se {se})",
            hat[k],
            truth[k]
        );
    }
}

fn max_gap(a: &DiscriminantCoeffs, b: &DiscriminantCoeffs) -> f64 {
    a.to_vec()
        .iter()
        .zip(b.to_vec())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn complete_fit_is_consistent() {
    let model = CanonicalModel::new(2.0, 0.4, 1).unwrap();
    let n = 100_000;
    let generated = gen_dataset(
        &model,
        &MissParams::new(0.0, 0.0).unwrap(),
        Mechanism::Mcar,
        n,
        11,
    );
    let complete = generated.truth.complete(&generated.data).unwrap();
    let beta = beta_from_theta(&fit_complete(&complete).unwrap()).unwrap();
    assert_within_se(&beta, &model.beta(), info_cc_beta(&model).matrix(), n);
}

#[test]
fn full_fit_is_consistent() {
    let model = CanonicalModel::new(2.0, 0.5, 1).unwrap();
    let xi = MissParams::new(1.5, -1.0).unwrap();
    let n = 100_000;
    let generated = gen_dataset(&model, &xi, Mechanism::DiscriminantSquare, n, 12);
    let fit = fit_full(&generated.data, None, &FitConfig::default()).unwrap();
    assert!(fit.converged);
    assert_within_se(
        &fit.beta_hat().unwrap(),
        &model.beta(),
        info_full_beta(&model, &xi).unwrap().matrix(),
        n,
    );
    let xi_hat = fit.xi_hat.unwrap();
    assert!(
        (xi_hat.xi0 - xi.xi0).abs() < 0.1 && (xi_hat.xi1 - xi.xi1).abs() < 0.1,
        "{xi_hat:?}"
    );
}

#[test]
fn ignore_fit_is_consistent_under_mcar() {
    let model = CanonicalModel::new(1.5, 0.5, 1).unwrap();
    let xi = MissParams::new(0.5, 0.0).unwrap();
    let n = 100_000;
    let generated = gen_dataset(&model, &xi, Mechanism::Mcar, n, 13);
    let fit = fit_ignore(&generated.data, None, &FitConfig::default()).unwrap();
    assert!(fit.converged);
    let info = info_ig_beta(&model, infomiss::special::logistic(xi.xi0)).unwrap();
    assert_within_se(&fit.beta_hat().unwrap(), &model.beta(), info.matrix(), n);
}

#[test]
fn fully_labeled_data_reduces_to_the_complete_fit() {
    let model = CanonicalModel::new(2.0, 0.5, 2).unwrap();
    let generated = gen_dataset(
        &model,
        &MissParams::new(0.0, 0.0).unwrap(),
        Mechanism::Mcar,
        400,
        14,
    );
    let complete = generated.truth.complete(&generated.data).unwrap();
    let config = FitConfig {
        fixed_xi1: Some(0.0),
        ..FitConfig::default()
    };
    let fit = fit_full(&complete, None, &config).unwrap();
    let direct = beta_from_theta(&fit_complete(&complete).unwrap()).unwrap();
    assert!(max_gap(&fit.beta_hat().unwrap(), &direct) < 1e-4);
}

#[test]
fn zero_slope_reduces_to_the_ignore_fit() {
    let model = CanonicalModel::new(2.0, 0.5, 1).unwrap();
    let generated = gen_dataset(
        &model,
        &MissParams::new(1.0, -1.0).unwrap(),
        Mechanism::DiscriminantSquare,
        500,
        15,
    );
    let config = FitConfig {
        fixed_xi1: Some(0.0),
        ..FitConfig::default()
    };
    let full = fit_full(&generated.data, None, &config).unwrap();
    let ignore = fit_ignore(&generated.data, None, &FitConfig::default()).unwrap();
    assert_eq!(full.xi_hat.unwrap().xi1, 0.0);
    assert!(max_gap(&full.beta_hat().unwrap(), &ignore.beta_hat().unwrap()) < 1e-4);
}

#[test]
fn relabeling_swaps_the_fit() {
    let model = CanonicalModel::new(2.0, 0.3, 2).unwrap();
    let generated = gen_dataset(
        &model,
        &MissParams::new(1.0, -1.0).unwrap(),
        Mechanism::DiscriminantSquare,
        300,
        16,
    );
    let swapped = Dataset::new(
        2,
        generated
            .data
            .records()
            .iter()
            .map(|r| Record {
                y: r.y.clone(),
                label: r.label.map(ClassLabel::swapped),
            })
            .collect(),
    )
    .unwrap();
    let a = fit_ignore(&generated.data, None, &FitConfig::default())
        .unwrap()
        .beta_hat()
        .unwrap();
    let b = fit_ignore(&swapped, None, &FitConfig::default())
        .unwrap()
        .beta_hat()
        .unwrap();
    assert!(max_gap(&a, &b.scaled(-1.0)) < 1e-4);
}

#[test]
fn fits_are_deterministic() {
    let model = CanonicalModel::new(1.0, 0.5, 2).unwrap();
    let generated = gen_dataset(
        &model,
        &MissParams::new(2.0, -2.0).unwrap(),
        Mechanism::DiscriminantSquare,
        200,
        17,
    );
    let config = FitConfig {
        seed: 9,
        ..FitConfig::default()
    };
    assert_eq!(
        fit_full(&generated.data, None, &config).unwrap(),
        fit_full(&generated.data, None, &config).unwrap()
    );
}

#[test]
fn modelling_the_missingness_lowers_the_error() {
    let model = CanonicalModel::new(2.0, 0.5, 1).unwrap();
    let xi = MissParams::new(3.0, -1.0).unwrap();
    let (mut full, mut ignore) = (0.0, 0.0);
    let datasets = 200;
    for seed in 0..datasets {
        let generated = gen_dataset(&model, &xi, Mechanism::DiscriminantSquare, 500, 1000 + seed);
        let fitted = fit_full(&generated.data, None, &FitConfig::default()).unwrap();
        full += conditional_error(&fitted.beta_hat().unwrap(), &model).unwrap();
        let fitted = fit_ignore(&generated.data, None, &FitConfig::default()).unwrap();
        ignore += conditional_error(&fitted.beta_hat().unwrap(), &model).unwrap();
    }
    assert!(
        full < ignore,
        "mean errors {} vs {}",
        full / datasets as f64,
        ignore / datasets as f64
    );
}
