//! Finite probability machinery: points of the simplex, joint state/signal
//! models, Bayes posteriors and deterministic garblings of signals.
//!
//! A signal `Y` is more informative than `Y'` when `Y' = g(Y)` for some index
//! map `g`. On finite spaces this is exactly [`JointSignalModel::garble`]:
//! rows of the joint table that share an image under `g` are merged, so every
//! coarse posterior is a mixture of fine posteriors.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::trial_rng;

/// Tolerance for structural identities (marginalization, mixtures).
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for probabilistic normalization.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub structural: f64,
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: STRUCTURAL_TOL,
            normalization: NORMALIZATION_TOL,
        }
    }
}

/// A point of the probability simplex over `m` states.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, NORMALIZATION_TOL)
    }

    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDist("empty probability vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDist(format!("entry {i} is {p}")));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidDist(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(m: usize) -> Self {
        Self {
            probs: vec![1.0 / m as f64; m],
        }
    }

    /// Point mass on state `i`.
    pub fn vertex(m: usize, i: usize) -> Self {
        let mut probs = vec![0.0; m];
        probs[i] = 1.0;
        Self { probs }
    }

    /// `t * self + (1 - t) * other`.
    pub fn mix(&self, other: &Dist, t: f64) -> Result<Dist> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| t * p + (1.0 - t) * q)
            .collect();
        Ok(Dist { probs })
    }

    /// Uniform draw on the simplex, i.e. Dirichlet(1, ..., 1).
    pub fn sample_uniform<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut probs: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|p| *p /= total);
            Self { probs }
        } else {
            Self::uniform(m)
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// Inner product with a payoff vector.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.probs.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Dist) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }
}

impl<'de> Deserialize<'de> for Dist {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        Dist::new(probs).map_err(serde::de::Error::custom)
    }
}

/// Vertices and edge midpoints of the `m`-simplex. These are always included
/// in convexity probes so that kinks along low-dimensional faces get visited.
pub fn structured_points(m: usize) -> Vec<Dist> {
    let mut out: Vec<Dist> = (0..m).map(|i| Dist::vertex(m, i)).collect();
    for i in 0..m {
        for j in (i + 1)..m {
            let mut probs = vec![0.0; m];
            probs[i] = 0.5;
            probs[j] = 0.5;
            out.push(Dist { probs });
        }
    }
    out
}

/// Ordered, distinct state realizations `x_1 < ... < x_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StateSpace {
    values: Vec<f64>,
}

impl StateSpace {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidStates("no states".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStates("non-finite state value".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStates(
                "state values must be strictly increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of a state value, exact match.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == x)
    }
}

impl<'de> Deserialize<'de> for StateSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        StateSpace::new(values).map_err(serde::de::Error::custom)
    }
}

/// Joint law of (signal, state). Row `j`, column `i` holds `P(Y = y_j, X = x_i)`.
///
/// Rows with zero mass are kept but skipped in every expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointSignalModel {
    states: StateSpace,
    joint: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawJoint {
    states: StateSpace,
    joint: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for JointSignalModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawJoint::deserialize(d)?;
        JointSignalModel::new(raw.states, raw.joint).map_err(serde::de::Error::custom)
    }
}

impl JointSignalModel {
    pub fn new(states: StateSpace, joint: Vec<Vec<f64>>) -> Result<Self> {
        let m = states.len();
        if joint.is_empty() {
            return Err(Error::InvalidModel("joint table has no rows".into()));
        }
        let mut total = 0.0;
        for (j, row) in joint.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidJoint {
                    row: j,
                    col: row.len().min(m),
                    reason: format!("row has {} entries, expected {m}", row.len()),
                });
            }
            for (i, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidJoint {
                        row: j,
                        col: i,
                        reason: format!("entry is {p}"),
                    });
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidModel(format!("grand sum is {total}")));
        }
        Ok(Self { states, joint })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Perfectly informative signal: `Y = X`.
    pub fn full_info(prior: &Dist, states: &StateSpace) -> Result<Self> {
        if prior.dim() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                got: prior.dim(),
            });
        }
        let m = prior.dim();
        let joint = (0..m)
            .map(|j| {
                let mut row = vec![0.0; m];
                row[j] = prior.probs()[j];
                row
            })
            .collect();
        Self::new(states.clone(), joint)
    }

    /// A signal independent of the state, reduced to a single row.
    pub fn no_info(&self) -> Self {
        Self {
            states: self.states.clone(),
            joint: vec![self.prior().probs],
        }
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn joint(&self) -> &[Vec<f64>] {
        &self.joint
    }

    pub fn n_signals(&self) -> usize {
        self.joint.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn marginal(&self, j: usize) -> f64 {
        self.joint[j].iter().sum()
    }

    pub fn marginals(&self) -> Vec<f64> {
        (0..self.n_signals()).map(|j| self.marginal(j)).collect()
    }

    pub fn posterior(&self, j: usize) -> Result<Dist> {
        if j >= self.n_signals() {
            return Err(Error::DimensionMismatch {
                expected: self.n_signals(),
                got: j,
            });
        }
        let nu = self.marginal(j);
        if nu <= 0.0 {
            return Err(Error::ZeroMarginal(j));
        }
        let probs: Vec<f64> = self.joint[j].iter().map(|p| p / nu).collect();
        Dist::new(probs)
    }

    /// `(nu_j, posterior_j)` for every signal with positive probability.
    pub fn posteriors(&self) -> Vec<(f64, Dist)> {
        (0..self.n_signals())
            .filter_map(|j| {
                let nu = self.marginal(j);
                (nu > 0.0).then(|| {
                    let probs = self.joint[j].iter().map(|p| p / nu).collect();
                    (nu, Dist { probs })
                })
            })
            .collect()
    }

    /// State marginal (column sums).
    pub fn prior(&self) -> Dist {
        let mut probs = vec![0.0; self.n_states()];
        for row in &self.joint {
            for (acc, p) in probs.iter_mut().zip(row) {
                *acc += p;
            }
        }
        Dist { probs }
    }

    /// Merge signal rows according to `g`.
    pub fn garble(&self, g: &Garbling) -> Result<Self> {
        if g.fine_len() != self.n_signals() {
            return Err(Error::InvalidGarbling(format!(
                "garbling covers {} signals, model has {}",
                g.fine_len(),
                self.n_signals()
            )));
        }
        let mut joint = vec![vec![0.0; self.n_states()]; g.coarse_len()];
        for (j, row) in self.joint.iter().enumerate() {
            let target = &mut joint[g.map()[j]];
            for (acc, p) in target.iter_mut().zip(row) {
                *acc += p;
            }
        }
        Ok(Self {
            states: self.states.clone(),
            joint,
        })
    }

    /// Largest componentwise gap between the two priors.
    pub fn prior_gap(&self, other: &JointSignalModel) -> Result<f64> {
        if self.states != other.states {
            return Err(Error::StateMismatch);
        }
        Ok(self.prior().max_abs_diff(&other.prior()))
    }

    pub fn check_same_prior(&self, other: &JointSignalModel, tol: f64) -> Result<()> {
        let gap = self.prior_gap(other)?;
        if gap > tol {
            return Err(Error::PriorMismatch { gap, tol });
        }
        Ok(())
    }

    /// `E_nu[phi(posterior)]`, skipping zero-probability signals.
    pub fn expect_over_posteriors<F: Fn(&Dist) -> f64>(&self, phi: F) -> f64 {
        self.posteriors()
            .iter()
            .map(|(nu, post)| nu * phi(post))
            .sum()
    }
}

/// Deterministic coarsening `j -> map[j]` of signal indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Garbling {
    map: Vec<usize>,
    coarse: usize,
}

impl Garbling {
    pub fn new(map: Vec<usize>, coarse: usize) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::InvalidGarbling("empty map".into()));
        }
        if let Some((j, &t)) = map.iter().enumerate().find(|(_, &t)| t >= coarse) {
            return Err(Error::InvalidGarbling(format!(
                "signal {j} maps to {t}, outside 0..{coarse}"
            )));
        }
        Ok(Self { map, coarse })
    }

    /// Coarse alphabet sized by the largest image index.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let coarse = map.iter().max().map_or(0, |m| m + 1);
        Self::new(map, coarse)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
            coarse: n,
        }
    }

    /// Everything merged into one signal.
    pub fn constant(n: usize) -> Self {
        Self {
            map: vec![0; n],
            coarse: 1,
        }
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn fine_len(&self) -> usize {
        self.map.len()
    }

    pub fn coarse_len(&self) -> usize {
        self.coarse
    }
}

impl<'de> Deserialize<'de> for Garbling {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = Vec::<usize>::deserialize(d)?;
        Garbling::from_map(map).map_err(serde::de::Error::custom)
    }
}

/// A convex function on the simplex written as `max_k (<slope_k, rho> + offset_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffine {
    pub slopes: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl MaxAffine {
    /// Support function of a finite vector set (all offsets zero).
    pub fn support(vectors: Vec<Vec<f64>>) -> Self {
        let offsets = vec![0.0; vectors.len()];
        Self {
            slopes: vectors,
            offsets,
        }
    }

    /// Coefficients uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(m: usize, pieces: usize, rng: &mut R) -> Self {
        let slopes = (0..pieces)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let offsets = (0..pieces).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self { slopes, offsets }
    }

    pub fn eval(&self, rho: &Dist) -> f64 {
        self.slopes
            .iter()
            .zip(&self.offsets)
            .map(|(s, c)| rho.expect(s) + c)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Outcome of the sampled convex-function inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub passed: bool,
    pub trials: usize,
    /// Smallest observed `E_nu[phi(P^Y)] - E_nu'[phi(P^Y')]`.
    pub min_gap: f64,
    /// The function attaining `min_gap` when the check failed.
    pub witness: Option<MaxAffine>,
}

/// `E_nu[phi(P^Y)] - E_nu'[phi(P^Y')]` for one convex `phi`.
pub fn information_gap(
    finer: &JointSignalModel,
    coarser: &JointSignalModel,
    phi: &MaxAffine,
) -> f64 {
    finer.expect_over_posteriors(|p| phi.eval(p)) - coarser.expect_over_posteriors(|p| phi.eval(p))
}

/// Check `E_nu[phi(P^Y)] >= E_nu'[phi(P^Y')] - 1e-9` on `trials` random
/// max-of-affine functions with `pieces` pieces each.
pub fn blackwell_sample_test(
    finer: &JointSignalModel,
    coarser: &JointSignalModel,
    trials: usize,
    pieces: usize,
    seed: u64,
) -> Result<TestReport> {
    if finer.states() != coarser.states() {
        return Err(Error::StateMismatch);
    }
    finer.check_same_prior(coarser, NORMALIZATION_TOL)?;
    let m = finer.n_states();
    let mut min_gap = f64::INFINITY;
    let mut worst = None;
    for k in 0..trials {
        let mut rng = trial_rng(seed, k as u64);
        let phi = MaxAffine::random(m, pieces.max(1), &mut rng);
        let gap = information_gap(finer, coarser, &phi);
        if gap < min_gap {
            min_gap = gap;
            worst = Some(phi);
        }
    }
    if trials == 0 {
        min_gap = 0.0;
    }
    let passed = min_gap >= -NORMALIZATION_TOL;
    Ok(TestReport {
        passed,
        trials,
        min_gap,
        witness: if passed { None } else { worst },
    })
}
