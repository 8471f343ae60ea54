use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decision::SolverConfig;
use crate::error::{Error, Result};
use crate::prob::{Dist, Garbling, JointSignalModel, StateSpace};
use crate::zoo::FamilySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Optimize,
    Compare,
    Certify,
    Probe,
    Blackwell,
    Foc,
}

impl Analysis {
    pub const ALL: [Analysis; 6] = [
        Analysis::Optimize,
        Analysis::Compare,
        Analysis::Certify,
        Analysis::Probe,
        Analysis::Blackwell,
        Analysis::Foc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Optimize => "optimize",
            Analysis::Compare => "compare",
            Analysis::Certify => "certify",
            Analysis::Probe => "probe",
            Analysis::Blackwell => "blackwell",
            Analysis::Foc => "foc",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            Analysis::Certify | Analysis::Probe | Analysis::Blackwell
        )
    }
}

/// Where the finer signal comes from. Rows of a joint table are signals,
/// columns are the model's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    Joint(Vec<Vec<f64>>),
    /// A `{"states", "joint"}` document, relative to the config file.
    File(PathBuf),
    FullInfo {
        prior: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub probe_trials: usize,
    pub blackwell_trials: usize,
    pub blackwell_pieces: usize,
    pub certify_samples: usize,
    pub certify_trials: usize,
    pub b1_probes: usize,
    /// `(a1, a0)` for certificates and the difference probe. Defaults to the
    /// points at three and one quarter of the first-stage interval.
    pub pair: Option<(f64, f64)>,
    /// First decision at which `J(a, .)` is probed. Defaults to the midpoint.
    pub probe_a: Option<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            probe_trials: 1000,
            blackwell_trials: 500,
            blackwell_pieces: 4,
            certify_samples: 200,
            certify_trials: 500,
            b1_probes: 5,
            pair: None,
            probe_a: None,
        }
    }
}

/// A batch of analyses on one model and one pair of signals.
///
/// The coarser signal is `garble(signal, garbling)` when a garbling is given
/// and the uninformative signal with the same prior otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: FamilySpec,
    pub signal: SignalSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub garbling: Option<Garbling>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub options: AnalysisOptions,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

const FIELDS: [&str; 8] = [
    "model", "signal", "garbling", "solver", "analyses", "seed", "output", "options",
];

fn field<T: DeserializeOwned>(
    obj: &serde_json::Map<String, Value>,
    key: &str,
) -> Result<Option<T>> {
    obj.get(key)
        .map(|v| {
            serde_json::from_value(v.clone())
                .map_err(|e| Error::config(format!("/{key}"), e.to_string()))
        })
        .transpose()
}

fn required<T: DeserializeOwned>(obj: &serde_json::Map<String, Value>, key: &str) -> Result<T> {
    field(obj, key)?.ok_or_else(|| Error::config(format!("/{key}"), "required field is missing"))
}

impl ExperimentConfig {
    /// Parse and validate a config document. Errors carry a JSON pointer.
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::config("", e.to_string()))?;
        Self::from_value(&value, base_dir)
    }

    pub fn from_value(value: &Value, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::config("", "the config must be a JSON object"))?;
        if let Some(k) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
            return Err(Error::config(format!("/{k}"), "unknown field"));
        }
        let analyses_raw: Vec<Value> = required(obj, "analyses")?;
        let mut analyses = Vec::with_capacity(analyses_raw.len());
        for (i, a) in analyses_raw.iter().enumerate() {
            let parsed: Analysis = serde_json::from_value(a.clone()).map_err(|_| {
                Error::config(
                    format!("/analyses/{i}"),
                    format!(
                        "unknown analysis {a}; expected one of {}",
                        Analysis::ALL.map(Analysis::name).join(", ")
                    ),
                )
            })?;
            analyses.push(parsed);
        }
        let cfg = Self {
            model: required(obj, "model")?,
            signal: required(obj, "signal")?,
            garbling: field(obj, "garbling")?,
            solver: field(obj, "solver")?.unwrap_or_default(),
            analyses,
            seed: field(obj, "seed")?,
            output: field(obj, "output")?,
            options: field(obj, "options")?.unwrap_or_default(),
            base_dir: base_dir.into(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, dir)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver
            .validate()
            .map_err(|e| Error::config("/solver", e.to_string()))?;
        if self.seed.is_none() {
            if let Some(i) = self.analyses.iter().position(|a| a.is_randomized()) {
                return Err(Error::config(
                    format!("/analyses/{i}"),
                    format!(
                        "analysis {} is randomized and needs a seed",
                        self.analyses[i].name()
                    ),
                ));
            }
        }
        let o = &self.options;
        if o.b1_probes < 2 || o.blackwell_pieces == 0 {
            return Err(Error::config(
                "/options",
                "b1_probes needs at least 2 and blackwell_pieces at least 1",
            ));
        }
        let (lo, hi) = self.model.first_interval;
        if let Some((a1, a0)) = o.pair {
            if !(a1 > a0 && a0 >= lo && a1 <= hi) {
                return Err(Error::config(
                    "/options/pair",
                    format!("need {lo} <= a0 < a1 <= {hi}"),
                ));
            }
        }
        if let Some(a) = o.probe_a {
            if !(a >= lo && a <= hi) {
                return Err(Error::config(
                    "/options/probe_a",
                    format!("outside [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    pub fn pair(&self) -> (f64, f64) {
        let (lo, hi) = self.model.first_interval;
        self.options
            .pair
            .unwrap_or((lo + 0.75 * (hi - lo), lo + 0.25 * (hi - lo)))
    }

    pub fn probe_a(&self) -> f64 {
        let (lo, hi) = self.model.first_interval;
        self.options.probe_a.unwrap_or(0.5 * (lo + hi))
    }

    /// The finer and the coarser signal over the model's states.
    pub fn signals(&self) -> Result<(JointSignalModel, JointSignalModel)> {
        let states = StateSpace::new(self.model.states.clone())
            .map_err(|e| Error::config("/model/states", e.to_string()))?;
        let at_signal = |e: Error| Error::config("/signal", e.to_string());
        let finer = match &self.signal {
            SignalSource::Joint(rows) => {
                JointSignalModel::new(states.clone(), rows.clone()).map_err(at_signal)?
            }
            SignalSource::FullInfo { prior } => {
                let prior = Dist::new(prior.clone()).map_err(at_signal)?;
                JointSignalModel::full_info(&prior, &states).map_err(at_signal)?
            }
            SignalSource::File(path) => {
                let text = std::fs::read_to_string(self.base_dir.join(path))?;
                let sig = JointSignalModel::from_json(&text).map_err(at_signal)?;
                if sig.states() != &states {
                    return Err(Error::config(
                        "/signal",
                        "signal states differ from the model states",
                    ));
                }
                sig
            }
        };
        let coarser = match &self.garbling {
            Some(g) => finer
                .garble(g)
                .map_err(|e| Error::config("/garbling", e.to_string()))?,
            None => finer.no_info(),
        };
        Ok((finer, coarser))
    }

    /// SHA-256 of the canonical JSON form, leaving out the output location.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(&Self {
            output: None,
            ..self.clone()
        })
        .expect("config serializes");
        let digest = Sha256::digest(bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
