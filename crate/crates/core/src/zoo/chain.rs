//! End-to-end check that a passing first-order certificate delivers what it
//! promises: the difference `J(a1, .) - J(a0, .)` is the support function of a
//! fixed set `K`, and therefore convex in the belief.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::families::{FamilySpec, ZooModel};
use super::foc::{foc_certificate_for, solve, FocCertificate};
use crate::decision::{epstein_j, maximize_over, payoff_set, FeasibleSet, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    convexity_probe, decomposition_certificate, support_identity_check, CertificateReport,
    ConvexityKind, ConvexityVerdict,
};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainOptions {
    /// Grid points per coordinate of `B(a1)` at which the certificate is probed.
    pub b1_probes: usize,
    /// Random beliefs in the support-function identity check.
    pub samples: usize,
    /// Random triples in the convexity probe.
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            b1_probes: 5,
            samples: 200,
            trials: 500,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub b1: Vec<f64>,
    pub certificate: Option<FocCertificate>,
    pub error: Option<String>,
}

impl ProbeOutcome {
    pub fn passed(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.passed)
    }
}

/// Which way the certificate points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `J(a1, .) - J(a0, .)` is a support function, hence convex.
    Convex,
    /// `J(a0, .) - J(a1, .)` is a support function, so the difference is concave.
    Concave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub a1: f64,
    pub a0: f64,
    pub probes: Vec<ProbeOutcome>,
    pub foc_all_passed: bool,
    pub reverse_all_passed: bool,
    /// Set when every probe passed in one direction.
    pub orientation: Option<Orientation>,
    /// Support-function identity for the certified direction.
    pub decomposition: Option<CertificateReport>,
    /// Sampled shape of `J(a1, .) - J(a0, .)`.
    pub convexity: Option<ConvexityVerdict>,
    /// A certificate was issued, yet the identity or the shape check failed.
    pub violation: bool,
}

fn empty_report() -> CertificateReport {
    CertificateReport {
        passed: false,
        k_set: None,
        max_gap: f64::INFINITY,
        worst_rho: Vec::new(),
        probes: 0,
        tolerance: crate::geometry::VERDICT_TOL,
    }
}

pub fn chain_check(
    spec: &FamilySpec,
    a1: f64,
    a0: f64,
    opts: &ChainOptions,
) -> Result<ChainReport> {
    opts.solver.validate()?;
    let zoo = Arc::new(ZooModel::new(spec)?);
    let model = zoo.to_decision_model()?;
    let xs = zoo.states().values().to_vec();
    let set1 = model.feasible_at(a1)?;
    model.feasible_at(a0)?;

    let probes: Vec<ProbeOutcome> = set1
        .grid_points(opts.b1_probes.max(2))
        .into_iter()
        .map(|b1| match foc_certificate_for(&zoo, a1, a0, &b1, &xs) {
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
    let foc_all_passed = probes.iter().all(ProbeOutcome::passed);
    let reverse_all_passed = probes
        .iter()
        .all(|p| p.certificate.as_ref().is_some_and(|c| c.reverse_passed));
    let orientation = if foc_all_passed {
        Some(Orientation::Convex)
    } else if reverse_all_passed {
        Some(Orientation::Concave)
    } else {
        None
    };
    let Some(orientation) = orientation else {
        return Ok(ChainReport {
            a1,
            a0,
            probes,
            foc_all_passed,
            reverse_all_passed,
            orientation: None,
            decomposition: None,
            convexity: None,
            violation: false,
        });
    };

    let cfg = opts.solver;
    let m = zoo.states().len();
    let probe_seed = derive_seed(opts.seed, "chain/decomposition");
    let sign = match orientation {
        Orientation::Convex => 1.0,
        Orientation::Concave => -1.0,
    };
    let j1 = |r: &crate::prob::Dist| epstein_j(&model, a1, r, &cfg).unwrap_or(f64::NAN);
    let j0 = |r: &crate::prob::Dist| epstein_j(&model, a0, r, &cfg).unwrap_or(f64::NAN);
    let decomposition = match set1 {
        FeasibleSet::Finite(_) => {
            let l1 = payoff_set(&model, a1, &cfg)?;
            let l0 = payoff_set(&model, a0, &cfg)?;
            let (target, base) = match orientation {
                Orientation::Convex => (&l1, &l0),
                Orientation::Concave => (&l0, &l1),
            };
            match decomposition_certificate(target, base, opts.samples, probe_seed) {
                Ok(r) => r,
                Err(Error::EmptyStarDifference) => empty_report(),
                Err(e) => return Err(e),
            }
        }
        FeasibleSet::Box(_) => {
            // K = { sign (U(a1, b1, .) - U(a0, b0(b1), .)) : b1 in B(a1) }.
            let sigma_k = |rho: &crate::prob::Dist| {
                let p = rho.probs();
                let obj = |b1: &[f64]| match solve(&zoo, a1, a0, b1) {
                    Ok(sol) => {
                        sign * xs
                            .iter()
                            .zip(p)
                            .filter(|(_, w)| **w > 0.0)
                            .map(|(x, w)| {
                                w * (zoo.utility(a1, b1, *x) - zoo.utility(a0, &sol.b0, *x))
                            })
                            .sum::<f64>()
                    }
                    Err(_) => f64::NAN,
                };
                maximize_over(&set1, obj, &cfg, zoo.is_concave_in_b()).value
            };
            match orientation {
                Orientation::Convex => {
                    support_identity_check(m, j1, j0, sigma_k, opts.samples, probe_seed)
                }
                Orientation::Concave => {
                    support_identity_check(m, j0, j1, sigma_k, opts.samples, probe_seed)
                }
            }
        }
    };
    let convexity = convexity_probe(
        |r| j1(r) - j0(r),
        m,
        opts.trials,
        derive_seed(opts.seed, "chain/convexity"),
    );
    let shape_ok = match orientation {
        Orientation::Convex => convexity.is_convex_or_affine(),
        Orientation::Concave => matches!(
            convexity.kind,
            ConvexityKind::Concave | ConvexityKind::Affine
        ),
    };
    let violation = !(decomposition.passed && shape_ok);
    Ok(ChainReport {
        a1,
        a0,
        probes,
        foc_all_passed,
        reverse_all_passed,
        orientation: Some(orientation),
        decomposition: Some(decomposition),
        convexity: Some(convexity),
        violation,
    })
}
