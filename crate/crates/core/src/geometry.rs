//! Finite convex geometry of payoff sets.
//!
//! A payoff set is a finite list of state-indexed payoff vectors. Its support
//! function `sigma(rho) = max_lambda <lambda, rho>` is evaluated on the
//! probability simplex only, where it coincides with the support function of
//! the downward closure. The closure is therefore never built: membership in
//! it is a componentwise domination query against the listed vectors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{structured_points, Dist};
use crate::seeding::trial_rng;

/// Tolerance used when classifying convexity and certificate gaps.
pub const VERDICT_TOL: f64 = 1e-9;
/// Tolerance for exact arithmetic identities and domination queries.
pub const ARITH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffSet {
    m: usize,
    vectors: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawPayoffSet {
    m: usize,
    vectors: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for PayoffSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPayoffSet::deserialize(d)?;
        let set = PayoffSet::new(raw.vectors).map_err(serde::de::Error::custom)?;
        if set.m != raw.m {
            return Err(serde::de::Error::custom(format!(
                "declared m = {} but vectors have dimension {}",
                raw.m, set.m
            )));
        }
        Ok(set)
    }
}

impl PayoffSet {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let m = match vectors.first() {
            Some(v) => v.len(),
            None => return Err(Error::InvalidPayoffSet("no vectors".into())),
        };
        if m == 0 {
            return Err(Error::InvalidPayoffSet("zero-dimensional vectors".into()));
        }
        for (k, v) in vectors.iter().enumerate() {
            if v.len() != m {
                return Err(Error::InvalidPayoffSet(format!(
                    "vector {k} has dimension {}, expected {m}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPayoffSet(format!(
                    "vector {k} has a non-finite entry"
                )));
            }
        }
        Ok(Self { m, vectors })
    }

    pub fn singleton(v: Vec<f64>) -> Result<Self> {
        Self::new(vec![v])
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Every vector shifted by `c`.
    pub fn translate(&self, c: &[f64]) -> Result<Self> {
        self.check_dim(c.len())?;
        Ok(Self {
            m: self.m,
            vectors: self
                .vectors
                .iter()
                .map(|v| v.iter().zip(c).map(|(a, b)| a + b).collect())
                .collect(),
        })
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got,
            });
        }
        Ok(())
    }

    pub fn support_value(&self, rho: &Dist) -> Result<f64> {
        self.check_dim(rho.dim())?;
        Ok(self.support_unchecked(rho.probs()))
    }

    pub(crate) fn support_unchecked(&self, rho: &[f64]) -> f64 {
        self.vectors
            .iter()
            .map(|v| dot(v, rho))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first vector attaining the support value.
    pub fn support_argmax(&self, rho: &Dist) -> Result<usize> {
        self.check_dim(rho.dim())?;
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (k, v) in self.vectors.iter().enumerate() {
            let val = rho.expect(v);
            if val > best_val {
                best = k;
                best_val = val;
            }
        }
        Ok(best)
    }

    /// Whether `k` lies in the downward closure.
    pub fn dominates(&self, k: &[f64], tol: f64) -> bool {
        self.vectors
            .iter()
            .any(|v| k.iter().zip(v).all(|(a, b)| *a <= *b + tol))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Keep the vectors not dominated by another one; near-duplicates collapse.
pub fn maximal_elements(mut vectors: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    // Descending coordinate sum puts every dominator ahead of what it dominates.
    vectors.sort_by(|a, b| {
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        sb.total_cmp(&sa).then_with(|| {
            for (x, y) in a.iter().zip(b) {
                match y.total_cmp(x) {
                    std::cmp::Ordering::Equal => continue,
                    o => return o,
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let dominated = kept
            .iter()
            .any(|k| v.iter().zip(k).all(|(a, b)| *a <= *b + tol));
        if !dominated {
            kept.push(v);
        }
    }
    kept
}

pub fn minkowski_sum(a: &PayoffSet, b: &PayoffSet) -> Result<PayoffSet> {
    a.check_dim(b.dim())?;
    let mut vectors = Vec::with_capacity(a.len() * b.len());
    for u in a.vectors() {
        for v in b.vectors() {
            let s: Vec<f64> = u.iter().zip(v).map(|(x, y)| x + y).collect();
            if !vectors.contains(&s) {
                vectors.push(s);
            }
        }
    }
    PayoffSet::new(vectors)
}

/// Maximal elements of `{k | k + lambda0 in lower(target) for all lambda0 in base}`,
/// or `None` when that set is empty.
///
/// The set is an intersection over `lambda0` of unions over `lambda1` of the
/// orthants below `lambda1 - lambda0`. Its maximal elements are componentwise
/// minima of `s(lambda0) - lambda0` over selections `s: base -> target`. The
/// selections are folded in one `lambda0` at a time, pruning dominated
/// candidates after each step, and the survivors are checked by the direct
/// membership test.
pub fn star_difference(target: &PayoffSet, base: &PayoffSet) -> Result<Option<PayoffSet>> {
    target.check_dim(base.dim())?;
    let mut frontier: Option<Vec<Vec<f64>>> = None;
    for l0 in base.vectors() {
        let shifted: Vec<Vec<f64>> = target
            .vectors()
            .iter()
            .map(|l1| l1.iter().zip(l0).map(|(a, b)| a - b).collect())
            .collect();
        let next = match frontier {
            None => shifted,
            Some(current) => {
                let mut out = Vec::with_capacity(current.len() * shifted.len());
                for c in &current {
                    for s in &shifted {
                        out.push(c.iter().zip(s).map(|(a, b)| a.min(*b)).collect());
                    }
                }
                out
            }
        };
        frontier = Some(maximal_elements(next, ARITH_TOL));
    }
    let candidates = frontier.unwrap_or_default();
    let members: Vec<Vec<f64>> = candidates
        .into_iter()
        .filter(|k| {
            base.vectors().iter().all(|l0| {
                let probe: Vec<f64> = k.iter().zip(l0).map(|(a, b)| a + b).collect();
                target.dominates(&probe, ARITH_TOL)
            })
        })
        .collect();
    if members.is_empty() {
        Ok(None)
    } else {
        PayoffSet::new(members).map(Some)
    }
}

/// Result of checking `sigma_1 - sigma_0 = sigma_K` on a probe set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub passed: bool,
    /// The decomposition set used, when it is an explicit finite set.
    pub k_set: Option<PayoffSet>,
    pub max_gap: f64,
    pub worst_rho: Vec<f64>,
    pub probes: usize,
    pub tolerance: f64,
}

/// Simplex vertices, edge midpoints and `samples` uniform draws.
pub fn probe_points(m: usize, samples: usize, seed: u64) -> Vec<Dist> {
    let mut pts = structured_points(m);
    pts.extend((0..samples).map(|k| Dist::sample_uniform(m, &mut trial_rng(seed, k as u64))));
    pts
}

/// Largest `|f1 - f0 - fk|` over the probe set.
pub fn support_identity_check<F1, F0, FK>(
    m: usize,
    f1: F1,
    f0: F0,
    fk: FK,
    samples: usize,
    seed: u64,
) -> CertificateReport
where
    F1: Fn(&Dist) -> f64 + Sync,
    F0: Fn(&Dist) -> f64 + Sync,
    FK: Fn(&Dist) -> f64 + Sync,
{
    let pts = probe_points(m, samples, seed);
    let gaps: Vec<f64> = pts
        .par_iter()
        .map(|rho| (f1(rho) - f0(rho) - fk(rho)).abs())
        .collect();
    let (worst, max_gap) = gaps
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(bi, bg), (i, &g)| {
            if g > bg || g.is_nan() {
                (i, g)
            } else {
                (bi, bg)
            }
        });
    CertificateReport {
        passed: max_gap <= VERDICT_TOL,
        k_set: None,
        max_gap,
        worst_rho: pts[worst].probs().to_vec(),
        probes: pts.len(),
        tolerance: VERDICT_TOL,
    }
}

/// Certify that `rho -> sigma_{target}(rho) - sigma_{base}(rho)` is the
/// support function of `star_difference(target, base)`.
pub fn decomposition_certificate(
    target: &PayoffSet,
    base: &PayoffSet,
    samples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    let k = star_difference(target, base)?.ok_or(Error::EmptyStarDifference)?;
    let mut report = support_identity_check(
        target.dim(),
        |r| target.support_unchecked(r.probs()),
        |r| base.support_unchecked(r.probs()),
        |r| k.support_unchecked(r.probs()),
        samples,
        seed,
    );
    report.k_set = Some(k);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvexityKind {
    Convex,
    Concave,
    Affine,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
    pub t: f64,
    /// `f(t rho1 + (1-t) rho2) - t f(rho1) - (1-t) f(rho2)`.
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityVerdict {
    pub kind: ConvexityKind,
    /// Largest positive defect, present when it exceeds the tolerance.
    pub against_convex: Option<ConvexityWitness>,
    /// Most negative defect, present when it exceeds the tolerance.
    pub against_concave: Option<ConvexityWitness>,
    pub max_defect: f64,
    pub min_defect: f64,
    pub triples: usize,
}

impl ConvexityVerdict {
    pub fn is_convex_or_affine(&self) -> bool {
        matches!(self.kind, ConvexityKind::Convex | ConvexityKind::Affine)
    }
}

/// Sample midpoint-convexity defects of `f` on the `m`-simplex.
///
/// Besides `trials` random triples (uniform endpoints, uniform `t`), every
/// pair of structured points (vertices and edge midpoints) is probed at
/// `t = 1/2`. Each random triple draws from its own stream, so the verdict
/// does not depend on evaluation order.
pub fn convexity_probe<F>(f: F, m: usize, trials: usize, seed: u64) -> ConvexityVerdict
where
    F: Fn(&Dist) -> f64 + Sync,
{
    let structured = structured_points(m);
    let mut triples: Vec<(Dist, Dist, f64)> = Vec::new();
    for i in 0..structured.len() {
        for j in (i + 1)..structured.len() {
            triples.push((structured[i].clone(), structured[j].clone(), 0.5));
        }
    }
    for k in 0..trials {
        let mut rng = trial_rng(seed, k as u64);
        let r1 = Dist::sample_uniform(m, &mut rng);
        let r2 = Dist::sample_uniform(m, &mut rng);
        let t: f64 = rng.random_range(f64::EPSILON..1.0);
        triples.push((r1, r2, t));
    }
    let defects: Vec<f64> = triples
        .par_iter()
        .map(|(r1, r2, t)| {
            let mid = r1.mix(r2, *t).expect("same dimension");
            f(&mid) - t * f(r1) - (1.0 - t) * f(r2)
        })
        .collect();

    let mut max_i = 0;
    let mut min_i = 0;
    for (i, d) in defects.iter().enumerate() {
        if *d > defects[max_i] {
            max_i = i;
        }
        if *d < defects[min_i] {
            min_i = i;
        }
    }
    let max_defect = defects[max_i];
    let min_defect = defects[min_i];
    let witness = |i: usize| ConvexityWitness {
        rho1: triples[i].0.probs().to_vec(),
        rho2: triples[i].1.probs().to_vec(),
        t: triples[i].2,
        defect: defects[i],
    };
    let convex_ok = max_defect <= VERDICT_TOL;
    let concave_ok = min_defect >= -VERDICT_TOL;
    let kind = match (convex_ok, concave_ok) {
        (true, true) => ConvexityKind::Affine,
        (true, false) => ConvexityKind::Convex,
        (false, true) => ConvexityKind::Concave,
        (false, false) => ConvexityKind::Neither,
    };
    ConvexityVerdict {
        kind,
        against_convex: (!convex_ok).then(|| witness(max_i)),
        against_concave: (!concave_ok).then(|| witness(min_i)),
        max_defect,
        min_defect,
        triples: triples.len(),
    }
}
