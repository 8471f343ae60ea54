//! Batch runs: a config names a model, a signal and a list of analyses; a run
//! produces one JSON document per analysis, a CSV table over the first-stage
//! grid, a manifest and a short text summary.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use config::{Analysis, AnalysisOptions, ExperimentConfig, SignalSource};

use crate::decision::{epstein_j, optimize_first, precautionary_compare, DecisionModel};
use crate::error::{Error, Result};
use crate::geometry::convexity_probe;
use crate::prob::{blackwell_sample_test, JointSignalModel};
use crate::seeding::derive_seed;
use crate::zoo::{
    build_model, chain_check, foc_certificate, ChainOptions, FamilySpec, ProbeOutcome,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub analysis: Analysis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// One line for the text summary.
    pub headline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub version: String,
    pub analyses: Vec<Analysis>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub reports: Vec<AnalysisReport>,
    /// `a, V_Y, V_Y2, delta, delta_verdict, ranking_holds`; present when the
    /// compare analysis ran.
    pub csv: Option<String>,
    pub manifest: Manifest,
    pub summary: String,
}

impl ReportBundle {
    pub fn has_errors(&self) -> bool {
        self.reports.iter().any(|r| r.error.is_some())
    }

    pub fn report(&self, a: Analysis) -> Option<&AnalysisReport> {
        self.reports.iter().find(|r| r.analysis == a)
    }

    /// Write every file atomically into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for r in &self.reports {
            let path = dir.join(format!("{}.json", r.analysis.name()));
            write_atomic(&path, serde_json::to_string_pretty(r)?.as_bytes())?;
            written.push(path);
        }
        if let Some(csv) = &self.csv {
            let path = dir.join("values.csv");
            write_atomic(&path, csv.as_bytes())?;
            written.push(path);
        }
        let path = dir.join("summary.txt");
        write_atomic(&path, self.summary.as_bytes())?;
        written.push(path);
        let path = dir.join("manifest.json");
        write_atomic(
            &path,
            serde_json::to_string_pretty(&self.manifest)?.as_bytes(),
        )?;
        written.push(path);
        Ok(written)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    model: DecisionModel,
    finer: JointSignalModel,
    coarser: JointSignalModel,
}

fn seed_for(cfg: &ExperimentConfig, a: Analysis) -> u64 {
    derive_seed(cfg.seed.unwrap_or(0), a.name())
}

/// JSON result, summary line and, for the compare analysis, the CSV table.
type Produced = (Value, String, Option<String>);

fn run_one(ctx: &Context<'_>, analysis: Analysis) -> Result<Produced> {
    let cfg = ctx.cfg;
    let solver = &cfg.solver;
    match analysis {
        Analysis::Optimize => {
            let f = optimize_first(&ctx.model, &ctx.finer, solver)?;
            let c = optimize_first(&ctx.model, &ctx.coarser, solver)?;
            let line = format!(
                "sup argmax finer {} coarser {}; values {} {}",
                f.sup(),
                c.sup(),
                f.value,
                c.value
            );
            Ok((json!({"finer": f, "coarser": c}), line, None))
        }
        Analysis::Compare => {
            let r = precautionary_compare(&ctx.model, &ctx.finer, &ctx.coarser, solver)?;
            let line = format!(
                "ranking_holds={} strict={} delta={} predicted={}",
                r.ranking_holds,
                r.strict_ranking_holds,
                r.delta_scan.label(),
                r.ranking_predicted
            );
            let csv = r.to_csv()?;
            Ok((serde_json::to_value(&r)?, line, Some(csv)))
        }
        Analysis::Certify => {
            let (a1, a0) = cfg.pair();
            let opts = ChainOptions {
                b1_probes: cfg.options.b1_probes,
                samples: cfg.options.certify_samples,
                trials: cfg.options.certify_trials,
                seed: seed_for(cfg, analysis),
                solver: *solver,
            };
            let r = chain_check(&cfg.model, a1, a0, &opts)?;
            let line = match (&r.orientation, &r.decomposition, &r.convexity) {
                (Some(o), Some(d), Some(c)) => format!(
                    "certificate {} ({o:?} orientation, max gap {:e}); difference {:?}",
                    if d.passed && !r.violation { "PASS" } else { "FAIL" },
                    d.max_gap,
                    c.kind
                ),
                _ => "first-order certificate does not pass at every probe; decomposition not attempted".to_string(),
            };
            Ok((serde_json::to_value(&r)?, line, None))
        }
        Analysis::Probe => {
            let seed = seed_for(cfg, analysis);
            let m = ctx.model.states().len();
            let a = cfg.probe_a();
            let j = convexity_probe(
                |r| epstein_j(&ctx.model, a, r, solver).unwrap_or(f64::NAN),
                m,
                cfg.options.probe_trials,
                derive_seed(seed, "j"),
            );
            let (a1, a0) = cfg.pair();
            let d = convexity_probe(
                |r| {
                    epstein_j(&ctx.model, a1, r, solver).unwrap_or(f64::NAN)
                        - epstein_j(&ctx.model, a0, r, solver).unwrap_or(f64::NAN)
                },
                m,
                cfg.options.probe_trials,
                derive_seed(seed, "difference"),
            );
            let line = format!("J(a, .) {:?}; J(a1, .) - J(a0, .) {:?}", j.kind, d.kind);
            Ok((
                json!({"a": a, "j": j, "pair": [a1, a0], "difference": d}),
                line,
                None,
            ))
        }
        Analysis::Blackwell => {
            let r = blackwell_sample_test(
                &ctx.finer,
                &ctx.coarser,
                cfg.options.blackwell_trials,
                cfg.options.blackwell_pieces,
                seed_for(cfg, analysis),
            )?;
            let line = format!(
                "{} (min gap {:e})",
                if r.passed { "PASS" } else { "FAIL" },
                r.min_gap
            );
            Ok((serde_json::to_value(&r)?, line, None))
        }
        Analysis::Foc => {
            let (a1, a0) = cfg.pair();
            let set1 = ctx.model.feasible_at(a1)?;
            let xs = &cfg.model.states;
            let outcomes: Vec<ProbeOutcome> = set1
                .grid_points(cfg.options.b1_probes)
                .into_iter()
                .map(|b1| match foc_certificate(&cfg.model, a1, a0, &b1, xs) {
                    Ok(c) => ProbeOutcome {
                        b1,
                        certificate: Some(c),
                        error: None,
                    },
                    Err(e) => ProbeOutcome {
                        b1,
                        certificate: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect();
            let passed = outcomes.iter().filter(|o| o.passed()).count();
            let worst = outcomes
                .iter()
                .filter_map(|o| o.certificate.as_ref().map(|c| c.residual))
                .fold(0.0_f64, f64::max);
            let reverse = outcomes
                .iter()
                .filter(|o| o.certificate.as_ref().is_some_and(|c| c.reverse_passed))
                .count();
            let line = format!(
                "{passed}/{n} probes pass, {reverse}/{n} pass reversed; max residual {worst:e}",
                n = outcomes.len()
            );
            Ok((json!({"a1": a1, "a0": a0, "probes": outcomes}), line, None))
        }
    }
}

/// Execute the configured analyses in order. Failures inside an analysis
/// are recorded in its report. Invalid models or signals are config errors.
pub fn run(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let model = build_model(&cfg.model).map_err(|e| Error::config("/model", e.to_string()))?;
    let (finer, coarser) = cfg.signals()?;
    let ctx = Context {
        cfg,
        model,
        finer,
        coarser,
    };
    let outcomes: Vec<(Analysis, Result<Produced>)> = cfg
        .analyses
        .par_iter()
        .map(|a| (*a, run_one(&ctx, *a)))
        .collect();

    let mut reports = Vec::new();
    let mut csv = None;
    for (analysis, outcome) in outcomes {
        reports.push(match outcome {
            Ok((value, headline, table)) => {
                if table.is_some() {
                    csv = table;
                }
                AnalysisReport {
                    analysis,
                    result: Some(value),
                    error: None,
                    headline,
                }
            }
            Err(e) => AnalysisReport {
                analysis,
                result: None,
                error: Some(e.to_string()),
                headline: format!("ERROR {e}"),
            },
        });
    }
    let mut files: Vec<String> = reports
        .iter()
        .map(|r| format!("{}.json", r.analysis.name()))
        .collect();
    if csv.is_some() {
        files.push("values.csv".into());
    }
    files.extend(["summary.txt".to_string(), "manifest.json".to_string()]);
    let manifest = Manifest {
        config_sha256: cfg.hash(),
        seed: cfg.seed,
        version: VERSION.to_string(),
        analyses: cfg.analyses.clone(),
        files,
    };
    let mut summary = format!("config {}\n", manifest.config_sha256);
    for r in &reports {
        summary.push_str(&format!("{}: {}\n", r.analysis.name(), r.headline));
    }
    Ok(ReportBundle {
        reports,
        csv,
        manifest,
        summary,
    })
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub a_star_finer: Option<f64>,
    pub a_star_coarser: Option<f64>,
    pub verdict: Option<String>,
    pub ranking_holds: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub parameter: String,
    /// JSON pointers into the model that were set.
    pub targets: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// `value, a_Y, a_Y2, verdict, ranking_holds, error`; missing cells are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["value", "a_Y", "a_Y2", "verdict", "ranking_holds", "error"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                opt(r.a_star_finer),
                opt(r.a_star_coarser),
                r.verdict.clone().unwrap_or_default(),
                r.ranking_holds.map(|b| b.to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join("sweep.csv");
        write_atomic(&csv_path, self.to_csv()?.as_bytes())?;
        let json_path = dir.join("sweep.json");
        write_atomic(&json_path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(vec![csv_path, json_path])
    }
}

fn collect_targets(v: &Value, name: &str, prefix: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = format!("{prefix}/{k}");
                if k == name && child.is_number() {
                    out.push(p.clone());
                }
                collect_targets(child, name, &p, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                collect_targets(child, name, &format!("{prefix}/{i}"), out);
            }
        }
        _ => {}
    }
}

/// Pointers addressed by `parameter`: a dotted path such as `params.gamma`,
/// or a bare name that matches every numeric field of that name.
pub fn sweep_targets(model: &FamilySpec, parameter: &str) -> Result<Vec<String>> {
    let v = serde_json::to_value(model)?;
    let targets = if parameter.contains('.') {
        let p = format!("/{}", parameter.replace('.', "/"));
        match v.pointer(&p) {
            Some(x) if x.is_number() => vec![p],
            _ => Vec::new(),
        }
    } else {
        let mut out = Vec::new();
        collect_targets(&v, parameter, "", &mut out);
        out
    };
    if targets.is_empty() {
        return Err(Error::config(
            "/model",
            format!("parameter `{parameter}` does not address a numeric field of the model"),
        ));
    }
    Ok(targets)
}

/// One compare analysis per value. Per-row failures are recorded in the row.
pub fn sweep(cfg: &ExperimentConfig, parameter: &str, values: &[f64]) -> Result<SweepReport> {
    cfg.validate()?;
    let targets = sweep_targets(&cfg.model, parameter)?;
    let base = serde_json::to_value(&cfg.model)?;
    let (finer, coarser) = cfg.signals()?;
    let rows = values
        .par_iter()
        .map(|&value| {
            let outcome = (|| -> Result<SweepRow> {
                let mut v = base.clone();
                for t in &targets {
                    *v.pointer_mut(t).expect("target exists") = json!(value);
                }
                let spec: FamilySpec = serde_json::from_value(v)?;
                let model = build_model(&spec)?;
                let r = precautionary_compare(&model, &finer, &coarser, &cfg.solver)?;
                Ok(SweepRow {
                    value,
                    a_star_finer: Some(r.a_star_finer.sup()),
                    a_star_coarser: Some(r.a_star_coarser.sup()),
                    verdict: Some(r.delta_scan.label().to_string()),
                    ranking_holds: Some(r.ranking_holds),
                    error: None,
                })
            })();
            outcome.unwrap_or_else(|e| SweepRow {
                value,
                a_star_finer: None,
                a_star_coarser: None,
                verdict: None,
                ranking_holds: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(SweepReport {
        parameter: parameter.to_string(),
        targets,
        rows,
    })
}
