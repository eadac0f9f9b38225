use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use infomiss::efficiency::{GridSpec, McarGridSpec};
use infomiss::estimation::{fit_complete, fit_full, fit_ignore, FitConfig};
use infomiss::{
    are_full, beta_from_theta, gen_dataset, loglik_complete, mcar_grid, q_prob, run_replications,
    table_grid, write_dataset, CanonicalModel, Mechanism, MissParams, SimConfig, ThetaParams,
};
use serde_json::{json, Value};

use crate::args::{AreArgs, FitArgs, GenArgs, SimulateArgs};
use crate::output::{fmt_num, fmt_opt, seed_from_env, write_manifest, write_output, Failure};

const DEFAULT_SEED: u64 = 1;
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

fn require<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::usage(format!("--{flag} is required")))
}

fn non_empty(v: &[f64], flag: &str) -> Result<(), Failure> {
    if v.is_empty() {
        return Err(Failure::usage(format!("--{flag} needs at least one value")));
    }
    Ok(())
}

fn resolve_seed(seed: Option<u64>) -> Result<u64, Failure> {
    Ok(match seed {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(DEFAULT_SEED),
    })
}

fn parse_mechanism(s: &str) -> Result<Mechanism, Failure> {
    Ok(s.parse::<Mechanism>()?)
}

pub fn are(mut a: AreArgs, threads: Option<usize>) -> Result<(), Failure> {
    match a.grid.as_deref() {
        None => {}
        Some("paper-table1") => {
            if a.mcar == Some(false) {
                return Err(Failure::usage("grid paper-table1 is the MCAR table"));
            }
            let g = McarGridSpec::published();
            a.mcar = Some(true);
            a.pi1.get_or_insert(g.pi1s);
            a.delta.get_or_insert(g.deltas);
            a.gamma_bar.get_or_insert(g.gamma_bar);
        }
        Some("paper-table2" | "paper-table3") => {
            if a.mcar == Some(true) {
                return Err(Failure::usage("use --grid paper-table1 for the MCAR table"));
            }
            let g = GridSpec::published();
            a.delta.get_or_insert(g.deltas);
            a.xi0.get_or_insert(g.xi0s);
            a.xi1.get_or_insert(g.xi1s);
            a.pi1.get_or_insert(vec![g.pi1]);
        }
        Some(other) => {
            return Err(Failure::usage(format!(
                "unknown grid '{other}' (expected paper-table1, paper-table2 or paper-table3)"
            )))
        }
    }
    a.mcar.get_or_insert(false);
    a.p.get_or_insert(1);
    a.pi1.get_or_insert(vec![0.5]);

    let p = a.p.unwrap();
    let digits = a.digits;
    let deltas = require(a.delta.clone(), "delta")?;
    let pi1s = a.pi1.clone().unwrap();
    non_empty(&deltas, "delta")?;
    non_empty(&pi1s, "pi1")?;
    for &d in &deltas {
        for &pi in &pi1s {
            CanonicalModel::new(d, pi, p)?;
        }
    }

    let mut csv = String::new();
    if a.mcar == Some(true) {
        if a.xi0.is_some() || a.xi1.is_some() {
            return Err(Failure::usage("--xi0 and --xi1 do not apply with --mcar"));
        }
        let gamma_bar = *a.gamma_bar.get_or_insert(1.0);
        let spec = McarGridSpec {
            pi1s,
            deltas,
            gamma_bar,
            p,
        };
        csv.push_str("pi1,delta,are\n");
        for cell in mcar_grid(&spec) {
            if let Some(e) = cell.error {
                return Err(Failure::numerical(format!(
                    "pi1={}, delta={}: {e}",
                    cell.pi1, cell.delta
                )));
            }
            let _ = writeln!(
                csv,
                "{},{},{}",
                fmt_num(cell.pi1, None),
                fmt_num(cell.delta, None),
                fmt_opt(cell.are, digits)
            );
        }
    } else {
        if a.gamma_bar.is_some() {
            return Err(Failure::usage("--gamma-bar applies only with --mcar"));
        }
        if pi1s.len() != 1 {
            return Err(Failure::usage("--pi1 takes a single value without --mcar"));
        }
        let xi0s = require(a.xi0.clone(), "xi0")?;
        let xi1s = require(a.xi1.clone(), "xi1")?;
        non_empty(&xi0s, "xi0")?;
        non_empty(&xi1s, "xi1")?;
        for &x0 in &xi0s {
            for &x1 in &xi1s {
                MissParams::new(x0, x1)?;
            }
        }
        let spec = GridSpec {
            deltas,
            xi0s,
            xi1s,
            pi1: pi1s[0],
            p,
        };
        csv.push_str("delta,xi0,xi1,are,gamma\n");
        for cell in table_grid(&spec) {
            if let Some(e) = cell.error {
                return Err(Failure::numerical(format!(
                    "delta={}, xi0={}, xi1={}: {e}",
                    cell.delta, cell.xi0, cell.xi1
                )));
            }
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_num(cell.delta, None),
                fmt_num(cell.xi0, None),
                fmt_num(cell.xi1, None),
                fmt_opt(cell.are, digits),
                fmt_opt(cell.gamma, digits)
            );
        }
    }
    write_output(a.out.as_deref(), &csv)?;
    if let Some(out) = a.out.as_deref() {
        write_manifest("are", &a, None, threads, out, &[out])?;
    }
    Ok(())
}

pub fn simulate(mut a: SimulateArgs, threads: Option<usize>) -> Result<(), Failure> {
    let preset_n = match a.grid.as_deref() {
        None => None,
        Some("paper-table4") => Some(100),
        Some("paper-table5") => Some(500),
        Some(other) => {
            return Err(Failure::usage(format!(
                "unknown grid '{other}' (expected paper-table4 or paper-table5)"
            )))
        }
    };
    if preset_n.is_some() {
        let g = GridSpec::published();
        a.delta.get_or_insert(g.deltas);
        a.xi0.get_or_insert(g.xi0s);
        a.xi1.get_or_insert(g.xi1s);
    }
    if let Some(n) = preset_n {
        a.n.get_or_insert(n);
    }
    a.pi1.get_or_insert(0.5);
    a.p.get_or_insert(1);
    a.replications.get_or_insert(1000);
    a.bootstrap.get_or_insert(1000);
    a.keep_unconverged.get_or_insert(false);
    let seed = resolve_seed(a.seed)?;
    a.seed = Some(seed);

    let spec = GridSpec {
        deltas: require(a.delta.clone(), "delta")?,
        xi0s: require(a.xi0.clone(), "xi0")?,
        xi1s: require(a.xi1.clone(), "xi1")?,
        pi1: a.pi1.unwrap(),
        p: a.p.unwrap(),
    };
    non_empty(&spec.deltas, "delta")?;
    non_empty(&spec.xi0s, "xi0")?;
    non_empty(&spec.xi1s, "xi1")?;
    let n = require(a.n, "n")?;
    let cells = spec.cells();
    let mut configs = Vec::with_capacity(cells.len());
    for (i, &(delta, xi0, xi1)) in cells.iter().enumerate() {
        let model = CanonicalModel::new(delta, spec.pi1, spec.p)?;
        let xi = MissParams::new(xi0, xi1)?;
        let mut c = SimConfig::new(
            model,
            xi,
            n,
            a.replications.unwrap(),
            seed.wrapping_add((i as u64).wrapping_mul(SEED_STRIDE)),
        );
        c.bootstrap_resamples = a.bootstrap.unwrap();
        c.keep_unconverged = a.keep_unconverged.unwrap();
        configs.push(c);
    }

    let digits = a.digits;
    let mut csv = String::from("delta,xi0,xi1,n,re_hat,bootstrap_se,are_theoretical,n_failed\n");
    for (i, c) in configs.iter().enumerate() {
        let r = run_replications(c)?;
        let (delta, xi0, xi1) = cells[i];
        if r.flagged {
            eprintln!(
                "warning: delta={delta}, xi0={xi0}, xi1={xi1}: {} of {} replicates failed",
                r.n_failed, c.replications
            );
        }
        let theory = are_full(&c.model, &c.xi).ok().map(|x| x.are);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            fmt_num(delta, None),
            fmt_num(xi0, None),
            fmt_num(xi1, None),
            n,
            fmt_num(r.re_hat, digits),
            fmt_num(r.bootstrap_se, digits),
            fmt_opt(theory, digits),
            r.n_failed
        );
    }
    write_output(a.out.as_deref(), &csv)?;
    if let Some(out) = a.out.as_deref() {
        write_manifest("simulate", &a, Some(seed), threads, out, &[out])?;
    }
    Ok(())
}

fn truth_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.csv"))
}

pub fn gen(mut a: GenArgs, threads: Option<usize>) -> Result<(), Failure> {
    a.pi1.get_or_insert(0.5);
    a.p.get_or_insert(1);
    a.mechanism
        .get_or_insert_with(|| Mechanism::DiscriminantSquare.to_string());
    let seed = resolve_seed(a.seed)?;
    a.seed = Some(seed);
    let model = CanonicalModel::new(require(a.delta, "delta")?, a.pi1.unwrap(), a.p.unwrap())?;
    let xi = MissParams::new(require(a.xi0, "xi0")?, require(a.xi1, "xi1")?)?;
    let mechanism = parse_mechanism(a.mechanism.as_deref().unwrap())?;
    let n = require(a.n, "n")?;
    if n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    let out = require(a.out.clone(), "out")?;

    let g = gen_dataset(&model, &xi, mechanism, n, seed);
    let mut buf = Vec::new();
    write_dataset(&g.data, &mut buf)?;
    std::fs::write(&out, buf).map_err(|e| crate::output::io_failure(&out, e))?;

    let mut truth = String::from("index,label,m,d\n");
    for (i, ((l, m), d)) in g
        .truth
        .labels
        .iter()
        .zip(&g.truth.missing)
        .zip(&g.truth.discriminant)
        .enumerate()
    {
        let _ = writeln!(
            truth,
            "{},{},{},{}",
            i + 1,
            l.as_u8(),
            u8::from(*m),
            fmt_num(*d, None)
        );
    }
    let tpath = truth_path(&out);
    std::fs::write(&tpath, truth).map_err(|e| crate::output::io_failure(&tpath, e))?;
    write_manifest("gen", &a, Some(seed), threads, &out, &[&out, &tpath])
}

fn theta_json(theta: &ThetaParams) -> Value {
    let sigma = theta.sigma();
    json!({
        "pi1": theta.pi1(),
        "mu1": theta.mu1().as_slice(),
        "mu2": theta.mu2().as_slice(),
        "sigma": (0..theta.p()).map(|i| sigma.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
    })
}

/// Fitted selection probability along the discriminant axis.
const Q_CURVE_POINTS: [f64; 9] = [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0];

pub fn fit(mut a: FitArgs, threads: Option<usize>) -> Result<(), Failure> {
    let defaults = FitConfig::default();
    a.mode.get_or_insert_with(|| "full".into());
    a.mechanism
        .get_or_insert_with(|| Mechanism::DiscriminantSquare.to_string());
    a.max_iter.get_or_insert(defaults.max_iter);
    a.grad_tol.get_or_insert(defaults.grad_tol);
    a.restarts.get_or_insert(defaults.restarts);
    let seed = resolve_seed(a.seed)?;
    a.seed = Some(seed);
    let input = require(a.input.clone(), "input")?;
    let data = infomiss::read_dataset_file(&input)?;
    let mechanism = parse_mechanism(a.mechanism.as_deref().unwrap())?;
    let config = FitConfig {
        max_iter: a.max_iter.unwrap(),
        grad_tol: a.grad_tol.unwrap(),
        restarts: a.restarts.unwrap(),
        seed,
        mechanism,
        fixed_xi1: a.fixed_xi1,
    };
    let mode = a.mode.clone().unwrap();

    let mut report = json!({
        "mode": mode,
        "n": data.n(),
        "n_labeled": data.n_labeled(),
        "n_unlabeled": data.n_unlabeled(),
    });
    let theta = match mode.as_str() {
        "complete" => {
            let theta = fit_complete(&data)?;
            let ll = loglik_complete(&theta, &data)?;
            report["loglik"] = json!(ll.value);
            report["converged"] = json!(true);
            report["iterations"] = json!(0);
            theta
        }
        "ignore" | "full" => {
            let fit = if mode == "ignore" {
                fit_ignore(&data, None, &config)?
            } else {
                if data.n_labeled() == 0 || data.n_unlabeled() == 0 {
                    eprintln!("warning: the selection parameters are poorly identified without both labeled and unlabeled records");
                }
                fit_full(&data, None, &config)?
            };
            if !fit.converged {
                eprintln!(
                    "warning: the fit did not converge (gradient norm {:e})",
                    fit.gradient_norm
                );
            }
            report["loglik"] = json!(fit.loglik);
            report["converged"] = json!(fit.converged);
            report["iterations"] = json!(fit.iterations);
            report["gradient_norm"] = json!(fit.gradient_norm);
            report["restarts"] = json!(fit.restarts);
            if let Some(xi) = fit.xi_hat {
                let beta = fit.beta_hat()?;
                let qs = data
                    .records()
                    .iter()
                    .map(|r| q_prob(&beta, &xi, &r.y, mechanism))
                    .collect::<Result<Vec<f64>, _>>()?;
                report["mechanism"] = json!(mechanism.to_string());
                report["xi_hat"] = json!({ "xi0": xi.xi0, "xi1": xi.xi1 });
                report["q_curve"] = json!({
                    "d": Q_CURVE_POINTS,
                    "q": Q_CURVE_POINTS.iter().map(|&d| xi.q_from_discriminant(d, mechanism)).collect::<Vec<_>>(),
                    "mean_fitted_q": qs.iter().sum::<f64>() / qs.len() as f64,
                    "observed_missing_fraction": data.missing_fraction(),
                });
            }
            fit.theta_hat
        }
        other => {
            return Err(Failure::usage(format!(
                "unknown mode '{other}' (expected complete, ignore or full)"
            )))
        }
    };
    let beta = beta_from_theta(&theta)?;
    report["theta_hat"] = theta_json(&theta);
    report["beta_hat"] = json!({ "beta0": beta.beta0, "beta1": beta.beta1.as_slice() });
    if let Some(out) = a.out.as_deref() {
        report["manifest"] = json!(crate::output::manifest_path(out).display().to_string());
    }
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| Failure::usage(e.to_string()))? + "\n";
    write_output(a.out.as_deref(), &text)?;
    if let Some(out) = a.out.as_deref() {
        write_manifest("fit", &a, Some(seed), threads, out, &[out])?;
    }
    Ok(())
}
