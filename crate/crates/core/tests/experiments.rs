mod common;

use std::path::PathBuf;

use common::{oracle_argmax, oracle_value};
use precaution::experiments::{run, sweep, Analysis, ExperimentConfig};
use precaution::zoo::{ChainReport, Orientation, FOC_TOL};
use precaution::{build_model, Error, OptResult, PrecautionReport};
use serde_json::Value;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.json"));
    ExperimentConfig::load(&path).unwrap()
}

fn result<T: serde::de::DeserializeOwned>(
    bundle: &precaution::experiments::ReportBundle,
    a: Analysis,
) -> T {
    let r = bundle.report(a).unwrap();
    assert!(r.error.is_none(), "{:?}", r.error);
    serde_json::from_value(r.result.clone().unwrap()).unwrap()
}

#[test]
fn additive_separable_optimizers_do_not_depend_on_information() {
    let bundle = run(&config("additive_separable")).unwrap();
    let v: Value = result(&bundle, Analysis::Optimize);
    let finer: OptResult = serde_json::from_value(v["finer"].clone()).unwrap();
    let coarser: OptResult = serde_json::from_value(v["coarser"].clone()).unwrap();
    assert_eq!(finer.maximizers, coarser.maximizers);
    let cmp: PrecautionReport = result(&bundle, Analysis::Compare);
    assert_eq!(cmp.delta_scan.label(), "constant");
}

#[test]
fn global_warming_demo_ranking_and_first_order_residuals() {
    let cfg = config("global_warming");
    let bundle = run(&cfg).unwrap();
    let cmp: PrecautionReport = result(&bundle, Analysis::Compare);
    assert!(cmp.ranking_holds && cmp.strict_ranking_holds);

    // The grid oracle finds the same ranking.
    let model = build_model(&cfg.model).unwrap();
    let (finer, coarser) = cfg.signals().unwrap();
    let (of, _) = oracle_argmax(&model, &finer, &cmp.grid);
    let (oc, _) = oracle_argmax(&model, &coarser, &cmp.grid);
    assert!(of <= oc + cmp.arg_tol, "oracle {of} vs {oc}");
    for (i, &a) in cmp.grid.iter().enumerate().step_by(20) {
        let o = oracle_value(&model, a, &finer);
        assert!((cmp.value_finer[i] - o).abs() <= 1e-6 * o.abs().max(1.0));
    }

    let foc: Value = result(&bundle, Analysis::Foc);
    let probes = foc["probes"].as_array().unwrap();
    let residuals: Vec<f64> = probes
        .iter()
        .filter_map(|p| p["certificate"]["residual"].as_f64())
        .collect();
    assert!(!residuals.is_empty());
    assert!(residuals.iter().all(|r| *r <= FOC_TOL));

    // The box is fixed, so probes at its ends map outside it and the chain is
    // not certified for this instance.
    let chain: ChainReport = result(&bundle, Analysis::Certify);
    assert!(chain.orientation.is_none() && !chain.violation);
    assert!(chain
        .probes
        .iter()
        .any(|p| p.certificate.as_ref().is_some_and(|c| c.reverse_passed)));
}

#[test]
fn consumption_savings_demo_certifies_a_concave_difference() {
    let bundle = run(&config("consumption_savings")).unwrap();
    assert!(!bundle.has_errors());
    let chain: ChainReport = result(&bundle, Analysis::Certify);
    assert_eq!(chain.orientation, Some(Orientation::Concave));
    assert!(chain.decomposition.as_ref().unwrap().passed && !chain.violation);
    let cmp: PrecautionReport = result(&bundle, Analysis::Compare);
    assert!(cmp.ranking_predicted && cmp.ranking_holds);
    let bw: Value = result(&bundle, Analysis::Blackwell);
    assert_eq!(bw["passed"], Value::Bool(true));
}

#[test]
fn gamma_sweep_rows_match_the_oracle() {
    let cfg = config("consumption_savings");
    let report = sweep(&cfg, "gamma", &[0.5, 2.0, 5.0]).unwrap();
    assert_eq!(
        report.targets,
        vec!["/functions/u2/gamma", "/functions/u3/gamma"]
    );
    assert_eq!(report.rows.len(), 3);
    let (finer, coarser) = cfg.signals().unwrap();
    for row in &report.rows {
        assert_eq!(row.ranking_holds, Some(true), "{row:?}");
        let mut spec: Value = serde_json::to_value(&cfg.model).unwrap();
        spec["functions"]["u2"]["gamma"] = row.value.into();
        spec["functions"]["u3"]["gamma"] = row.value.into();
        let model = build_model(&serde_json::from_value(spec).unwrap()).unwrap();
        let (lo, hi) = cfg.model.first_interval;
        let grid = precaution::decision::search::linspace(lo, hi, cfg.solver.a_grid);
        let step = cfg.solver.a_step((lo, hi));
        let (of, _) = oracle_argmax(&model, &finer, &grid);
        let (oc, _) = oracle_argmax(&model, &coarser, &grid);
        assert!(of <= oc + step, "gamma {}: oracle {of} vs {oc}", row.value);
        assert!((row.a_star_finer.unwrap() - of).abs() <= step);
        assert!((row.a_star_coarser.unwrap() - oc).abs() <= step);
    }
    // At gamma 0.5 the value of information increases with a; the ranking
    // survives only within one grid step.
    assert_eq!(report.rows[0].verdict.as_deref(), Some("increasing"));
}

#[test]
fn sweep_isolates_domain_violations() {
    let report = sweep(
        &config("consumption_savings"),
        "gamma",
        &[2.0, 1.0, -3.0, 5.0],
    )
    .unwrap();
    assert_eq!(report.rows.len(), 4);
    for (row, bad) in report.rows.iter().zip([false, true, true, false]) {
        assert_eq!(row.error.is_some(), bad, "{row:?}");
        assert_eq!(row.ranking_holds.is_some(), !bad);
    }
    assert!(report.rows[1].error.as_ref().unwrap().contains("u2"));
}

#[test]
fn sweep_rejects_unknown_parameters() {
    let err = sweep(&config("consumption_savings"), "delta", &[1.0]).unwrap_err();
    assert!(
        matches!(err, Error::Config { ref pointer, .. } if pointer == "/model"),
        "{err}"
    );
    let err = sweep(&config("consumption_savings"), "params.nope", &[1.0]).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
}

#[test]
fn bundle_files_and_manifest() {
    let cfg = config("consumption_savings");
    let bundle = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = bundle.write(dir.path()).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, bundle.manifest.files);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config_sha256"], Value::String(cfg.hash()));
    assert_eq!(manifest["seed"], Value::from(5));
    let csv = std::fs::read_to_string(dir.path().join("values.csv")).unwrap();
    assert!(csv.starts_with("a,V_Y,V_Y2,delta,delta_verdict,ranking_holds\n"));
    assert_eq!(csv.lines().count(), cfg.solver.a_grid + 1);
}

#[test]
fn seed_changes_randomized_reports_only() {
    let mut cfg = config("consumption_savings");
    let a = run(&cfg).unwrap();
    cfg.seed = Some(6);
    let b = run(&cfg).unwrap();
    assert_eq!(a.csv, b.csv);
    assert_eq!(a.report(Analysis::Optimize), b.report(Analysis::Optimize));
    assert_ne!(a.report(Analysis::Probe), b.report(Analysis::Probe));
}

#[test]
fn signal_from_file_and_bad_model() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("signal.json"),
        r#"{"states": [0.6, 1.0, 1.4], "joint": [[0.3, 0.0, 0.0], [0.0, 0.4, 0.3]]}"#,
    )
    .unwrap();
    let mut v: Value = serde_json::to_value(config("consumption_savings")).unwrap();
    v["signal"] = serde_json::json!({"file": "signal.json"});
    v.as_object_mut().unwrap().remove("garbling");
    let cfg = ExperimentConfig::from_value(&v, dir.path()).unwrap();
    let (finer, coarser) = cfg.signals().unwrap();
    assert_eq!((finer.n_signals(), coarser.n_signals()), (2, 1));

    v["model"]["params"]["r"] = (-1.0).into();
    let cfg = ExperimentConfig::from_value(&v, dir.path()).unwrap();
    assert!(matches!(run(&cfg), Err(Error::Config { ref pointer, .. }) if pointer == "/model"));
}
