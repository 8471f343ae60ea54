use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::catalog::{CatalogFn, DOMAIN_MARGIN};
use crate::decision::{DecisionModel, FeasibleSet};
use crate::error::{Error, Result};
use crate::prob::StateSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    #[serde(alias = "additive_separable")]
    AdditiveSeparable,
    #[serde(alias = "risk_neutral")]
    RiskNeutral,
    #[serde(alias = "consumption_savings")]
    ConsumptionSavings,
    #[serde(alias = "global_warming")]
    GlobalWarming,
    #[serde(alias = "cake_eating")]
    CakeEating,
}

/// Coefficients of the risk-neutral family
/// `U = u(a) - b'Qb/2 + a h'b + sum_i (W_i + a Wa_i)'b xi_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskNeutralMatrices {
    /// `n x n`, symmetric positive definite.
    pub q: Vec<Vec<f64>>,
    /// Length `n`.
    pub h: Vec<f64>,
    /// `p x n`; row `i` multiplies noise component `i`.
    pub w: Vec<Vec<f64>>,
    /// `p x n`; the part of each row that scales with `a`.
    pub wa: Vec<Vec<f64>>,
    /// One `p`-vector per state. Omitted means `p = 1` and `xi(x) = x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<Vec<f64>>>,
}

/// JSON description of a model-zoo instance.
///
/// Parameters by family (defaults in parentheses):
/// * `AdditiveSeparable`: `ku` (0), `kv` (1); functions `u`, `v`.
///   `U = u(a - ku x) + sum_k v(b_k - kv x)`.
/// * `RiskNeutral`: function `u`, block `matrices`.
/// * `ConsumptionSavings`: `w`, `beta`, `r`, `margin` (1e-6); functions `u1`,
///   `u2`, `u3`. `U = u1(w - a) + beta u2(r a - b) + beta^2 u3(b x)` with
///   `B(a) = [margin r a, (1 - margin) r a]`.
/// * `GlobalWarming`: `gamma`, `eta`; function `u`.
///   `U = u(a) + v(b - x (a + b))`, `v(z) = gamma/(1-gamma) (eta + z/gamma)^(1-gamma)`.
/// * `CakeEating`: functions `u`, `v`, `w`. `U = u(a) + v(b) + w(x - a - b)`.
///
/// Every family except `ConsumptionSavings` takes exactly one of
/// `second_box` and `second_finite`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: FamilyKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub functions: BTreeMap<String, CatalogFn>,
    pub states: Vec<f64>,
    pub first_interval: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_box: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_finite: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<RiskNeutralMatrices>,
}

impl FamilySpec {
    pub fn new(family: FamilyKind, states: Vec<f64>, first_interval: (f64, f64)) -> Self {
        Self {
            family,
            params: BTreeMap::new(),
            functions: BTreeMap::new(),
            states,
            first_interval,
            second_box: None,
            second_finite: None,
            matrices: None,
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn function(mut self, name: &str, f: CatalogFn) -> Self {
        self.functions.insert(name.to_string(), f);
        self
    }

    pub fn with_box(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.second_box = Some(bounds);
        self
    }

    pub fn with_finite(mut self, points: Vec<Vec<f64>>) -> Self {
        self.second_finite = Some(points);
        self
    }

    pub fn with_matrices(mut self, m: RiskNeutralMatrices) -> Self {
        self.matrices = Some(m);
        self
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Family {
    AdditiveSeparable {
        u: CatalogFn,
        v: CatalogFn,
        ku: f64,
        kv: f64,
    },
    RiskNeutral {
        u: CatalogFn,
        q: DMatrix<f64>,
        h: DVector<f64>,
        /// `n x p`, columns are the `W_i`.
        w: DMatrix<f64>,
        wa: DMatrix<f64>,
        /// Noise vector per state index.
        noise: Option<Vec<DVector<f64>>>,
    },
    ConsumptionSavings {
        u1: CatalogFn,
        u2: CatalogFn,
        u3: CatalogFn,
        wealth: f64,
        beta: f64,
        r: f64,
    },
    GlobalWarming {
        u: CatalogFn,
        gamma: f64,
        eta: f64,
    },
    CakeEating {
        u: CatalogFn,
        v: CatalogFn,
        w: CatalogFn,
    },
}

#[derive(Debug, Clone)]
enum SecondSet {
    Fixed(FeasibleSet),
    /// `[margin r a, (1 - margin) r a]`
    Scaled {
        r: f64,
        margin: f64,
    },
}

/// A validated model-zoo instance with closed-form derivatives in `b`.
#[derive(Debug, Clone)]
pub struct ZooModel {
    pub(crate) family: Family,
    states: StateSpace,
    first_interval: (f64, f64),
    second: SecondSet,
    b_dim: usize,
}

fn gjt_v(gamma: f64, eta: f64, z: f64) -> f64 {
    gamma / (1.0 - gamma) * (eta + z / gamma).powf(1.0 - gamma)
}

pub(crate) fn gjt_v1(gamma: f64, eta: f64, z: f64) -> f64 {
    (eta + z / gamma).powf(-gamma)
}

fn gjt_v2(gamma: f64, eta: f64, z: f64) -> f64 {
    -(eta + z / gamma).powf(-gamma - 1.0)
}

fn to_matrix(name: &str, rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::domain(
            name,
            format!("every row needs {ncols} entries"),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain(name, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn range_of(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

struct Reader<'a> {
    spec: &'a FamilySpec,
    used_params: Vec<&'static str>,
    used_fns: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(spec: &'a FamilySpec) -> Self {
        Self {
            spec,
            used_params: Vec::new(),
            used_fns: Vec::new(),
        }
    }

    fn param(&mut self, name: &'static str, default: Option<f64>) -> Result<f64> {
        self.used_params.push(name);
        let v = match (self.spec.params.get(name), default) {
            (Some(v), _) => *v,
            (None, Some(d)) => d,
            (None, None) => return Err(Error::domain(name, "required parameter is missing")),
        };
        if !v.is_finite() {
            return Err(Error::domain(name, "must be finite"));
        }
        Ok(v)
    }

    fn function(&mut self, name: &'static str) -> Result<CatalogFn> {
        self.used_fns.push(name);
        let f = *self
            .spec
            .functions
            .get(name)
            .ok_or_else(|| Error::domain(name, "required function is missing"))?;
        f.validate(name)?;
        Ok(f)
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self
            .spec
            .params
            .keys()
            .find(|k| !self.used_params.contains(&k.as_str()))
        {
            return Err(Error::domain(
                k.clone(),
                "unknown parameter for this family",
            ));
        }
        if let Some(k) = self
            .spec
            .functions
            .keys()
            .find(|k| !self.used_fns.contains(&k.as_str()))
        {
            return Err(Error::domain(k.clone(), "unknown function for this family"));
        }
        Ok(())
    }
}

impl ZooModel {
    pub fn new(spec: &FamilySpec) -> Result<Self> {
        let states = StateSpace::new(spec.states.clone())?;
        let (a_lo, a_hi) = spec.first_interval;
        if !(a_lo.is_finite() && a_hi.is_finite() && a_lo <= a_hi) {
            return Err(Error::domain(
                "first_interval",
                format!("[{a_lo}, {a_hi}] is not an interval"),
            ));
        }
        let mut rd = Reader::new(spec);
        let (x_lo, x_hi) = range_of(states.values().iter().copied());

        let fixed = match spec.family {
            FamilyKind::ConsumptionSavings => {
                if spec.second_box.is_some() || spec.second_finite.is_some() {
                    return Err(Error::domain(
                        "second_box",
                        "the consumption-savings set is derived from r and must not be given",
                    ));
                }
                None
            }
            _ => Some(match (&spec.second_box, &spec.second_finite) {
                (Some(b), None) => FeasibleSet::Box(b.clone()),
                (None, Some(f)) => FeasibleSet::Finite(f.clone()),
                _ => {
                    return Err(Error::domain(
                        "second_box",
                        "give exactly one of second_box and second_finite",
                    ))
                }
            }),
        };
        let (b_dim, b_ranges) = match &fixed {
            Some(FeasibleSet::Box(b)) => {
                if b.is_empty()
                    || b.iter()
                        .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
                {
                    return Err(Error::domain(
                        "second_box",
                        "needs finite intervals lo <= hi",
                    ));
                }
                (b.len(), b.clone())
            }
            Some(FeasibleSet::Finite(list)) => {
                let n = list.first().map_or(0, Vec::len);
                if n == 0
                    || list
                        .iter()
                        .any(|p| p.len() != n || p.iter().any(|v| !v.is_finite()))
                {
                    return Err(Error::domain(
                        "second_finite",
                        "needs nonempty points of equal dimension",
                    ));
                }
                let ranges = (0..n)
                    .map(|k| range_of(list.iter().map(|p| p[k])))
                    .collect();
                (n, ranges)
            }
            None => (1, Vec::new()),
        };
        if spec.matrices.is_some() && spec.family != FamilyKind::RiskNeutral {
            return Err(Error::domain(
                "matrices",
                "only the risk-neutral family takes matrices",
            ));
        }

        let (family, second) = match spec.family {
            FamilyKind::AdditiveSeparable => {
                let u = rd.function("u")?;
                let v = rd.function("v")?;
                let ku = rd.param("ku", Some(0.0))?;
                let kv = rd.param("kv", Some(1.0))?;
                let (lo, hi) = range_of([
                    a_lo - ku * x_lo,
                    a_lo - ku * x_hi,
                    a_hi - ku * x_lo,
                    a_hi - ku * x_hi,
                ]);
                u.check_range("u", lo, hi)?;
                for (blo, bhi) in &b_ranges {
                    let (lo, hi) = range_of([
                        blo - kv * x_lo,
                        blo - kv * x_hi,
                        bhi - kv * x_lo,
                        bhi - kv * x_hi,
                    ]);
                    v.check_range("v", lo, hi)?;
                }
                (
                    Family::AdditiveSeparable { u, v, ku, kv },
                    SecondSet::Fixed(fixed.unwrap()),
                )
            }
            FamilyKind::RiskNeutral => {
                let u = rd.function("u")?;
                u.check_range("u", a_lo, a_hi)?;
                let mats = spec.matrices.as_ref().ok_or_else(|| {
                    Error::domain("matrices", "required for the risk-neutral family")
                })?;
                let n = b_dim;
                let q = to_matrix("q", &mats.q, n)?;
                if q.nrows() != n {
                    return Err(Error::domain("q", format!("must be {n} x {n}")));
                }
                if (&q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax()) {
                    return Err(Error::domain("q", "must be symmetric"));
                }
                if q.clone().cholesky().is_none() {
                    return Err(Error::domain("q", "must be positive definite"));
                }
                if mats.h.len() != n || mats.h.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("h", format!("needs {n} finite entries")));
                }
                let h = DVector::from_column_slice(&mats.h);
                let w = to_matrix("w", &mats.w, n)?.transpose();
                let wa = to_matrix("wa", &mats.wa, n)?.transpose();
                let p = w.ncols();
                if p == 0 || wa.ncols() != p {
                    return Err(Error::domain(
                        "wa",
                        "w and wa need the same positive number of rows",
                    ));
                }
                let noise = match &mats.noise {
                    None if p == 1 => None,
                    None => {
                        return Err(Error::domain(
                            "noise",
                            "required when w has more than one row",
                        ))
                    }
                    Some(rows) => {
                        if rows.len() != states.len() {
                            return Err(Error::domain("noise", "needs one row per state"));
                        }
                        let m = to_matrix("noise", rows, p)?;
                        Some(m.row_iter().map(|r| r.transpose()).collect())
                    }
                };
                (
                    Family::RiskNeutral {
                        u,
                        q,
                        h,
                        w,
                        wa,
                        noise,
                    },
                    SecondSet::Fixed(fixed.unwrap()),
                )
            }
            FamilyKind::ConsumptionSavings => {
                let u1 = rd.function("u1")?;
                let u2 = rd.function("u2")?;
                let u3 = rd.function("u3")?;
                let wealth = rd.param("w", None)?;
                let beta = rd.param("beta", None)?;
                let r = rd.param("r", None)?;
                let margin = rd.param("margin", Some(DOMAIN_MARGIN))?;
                if !(beta > 0.0) {
                    return Err(Error::domain("beta", "must be positive"));
                }
                if !(r > 0.0) {
                    return Err(Error::domain("r", "must be positive"));
                }
                if !(margin > 0.0 && margin < 0.5) {
                    return Err(Error::domain("margin", "must lie in (0, 0.5)"));
                }
                if a_lo < 0.0 {
                    return Err(Error::domain(
                        "first_interval",
                        "savings must be nonnegative",
                    ));
                }
                u1.check_range("u1", wealth - a_hi, wealth - a_lo)?;
                // The relative margin of B(a) keeps u2 and u3 strictly inside
                // their domains whenever a > 0.
                u2.check_range_above("u2", margin * r * a_lo, (1.0 - margin) * r * a_hi, 0.0)?;
                let (b_lo, b_hi) = (margin * r * a_lo, (1.0 - margin) * r * a_hi);
                let (lo, hi) = range_of([b_lo * x_lo, b_lo * x_hi, b_hi * x_lo, b_hi * x_hi]);
                u3.check_range_above("u3", lo, hi, 0.0)?;
                (
                    Family::ConsumptionSavings {
                        u1,
                        u2,
                        u3,
                        wealth,
                        beta,
                        r,
                    },
                    SecondSet::Scaled { r, margin },
                )
            }
            FamilyKind::GlobalWarming => {
                let u = rd.function("u")?;
                let gamma = rd.param("gamma", None)?;
                let eta = rd.param("eta", None)?;
                if !(gamma > 0.0) || gamma == 1.0 {
                    return Err(Error::domain(
                        "gamma",
                        "must be positive and different from 1",
                    ));
                }
                if eta < 0.0 {
                    return Err(Error::domain("eta", "must be nonnegative"));
                }
                if b_dim != 1 {
                    return Err(Error::domain(
                        "second_box",
                        "the global-warming family has a scalar b",
                    ));
                }
                u.check_range("u", a_lo, a_hi)?;
                let (blo, bhi) = b_ranges[0];
                let mut z_min = f64::INFINITY;
                for a in [a_lo, a_hi] {
                    for b in [blo, bhi] {
                        for x in [x_lo, x_hi] {
                            z_min = z_min.min(b - x * (a + b));
                        }
                    }
                }
                if eta + z_min / gamma < DOMAIN_MARGIN {
                    return Err(Error::domain(
                        "eta",
                        format!(
                            "eta + z/gamma reaches {} below the margin",
                            eta + z_min / gamma
                        ),
                    ));
                }
                (
                    Family::GlobalWarming { u, gamma, eta },
                    SecondSet::Fixed(fixed.unwrap()),
                )
            }
            FamilyKind::CakeEating => {
                let u = rd.function("u")?;
                let v = rd.function("v")?;
                let w = rd.function("w")?;
                if b_dim != 1 {
                    return Err(Error::domain(
                        "second_box",
                        "the cake-eating family has a scalar b",
                    ));
                }
                let (blo, bhi) = b_ranges[0];
                u.check_range("u", a_lo, a_hi)?;
                v.check_range("v", blo, bhi)?;
                w.check_range("w", x_lo - a_hi - bhi, x_hi - a_lo - blo)?;
                (
                    Family::CakeEating { u, v, w },
                    SecondSet::Fixed(fixed.unwrap()),
                )
            }
        };
        rd.finish()?;
        Ok(Self {
            family,
            states,
            first_interval: spec.first_interval,
            second,
            b_dim,
        })
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn first_interval(&self) -> (f64, f64) {
        self.first_interval
    }

    pub fn b_dim(&self) -> usize {
        self.b_dim
    }

    pub fn feasible(&self, a: f64) -> FeasibleSet {
        match &self.second {
            SecondSet::Fixed(set) => set.clone(),
            SecondSet::Scaled { r, margin } => {
                FeasibleSet::interval(margin * r * a, (1.0 - margin) * r * a)
            }
        }
    }

    /// Whether `b -> E_rho U(a, b, .)` is concave, hence unimodal along coordinates.
    pub fn is_concave_in_b(&self) -> bool {
        match &self.family {
            Family::AdditiveSeparable { v, .. } => v.is_concave(),
            Family::RiskNeutral { .. } => true,
            Family::ConsumptionSavings { u2, u3, .. } => u2.is_concave() && u3.is_concave(),
            Family::GlobalWarming { .. } => true,
            Family::CakeEating { v, w, .. } => v.is_concave() && w.is_concave(),
        }
    }

    fn noise(&self, x: f64) -> Option<DVector<f64>> {
        match &self.family {
            Family::RiskNeutral {
                noise: Some(rows), ..
            } => self.states.index_of(x).map(|i| rows[i].clone()),
            Family::RiskNeutral { noise: None, .. } => Some(DVector::from_element(1, x)),
            _ => None,
        }
    }

    pub fn utility(&self, a: f64, b: &[f64], x: f64) -> f64 {
        match &self.family {
            Family::AdditiveSeparable { u, v, ku, kv } => {
                u.value(a - ku * x) + b.iter().map(|bk| v.value(bk - kv * x)).sum::<f64>()
            }
            Family::RiskNeutral { u, q, h, w, wa, .. } => {
                let Some(xi) = self.noise(x) else {
                    return f64::NAN;
                };
                let bv = DVector::from_column_slice(b);
                let lin = (w + wa * a) * xi + h * a;
                u.value(a) - 0.5 * bv.dot(&(q * &bv)) + lin.dot(&bv)
            }
            Family::ConsumptionSavings {
                u1,
                u2,
                u3,
                wealth,
                beta,
                r,
                ..
            } => {
                u1.value(wealth - a)
                    + beta * u2.value(r * a - b[0])
                    + beta * beta * u3.value(b[0] * x)
            }
            Family::GlobalWarming { u, gamma, eta } => {
                u.value(a) + gjt_v(*gamma, *eta, b[0] - x * (a + b[0]))
            }
            Family::CakeEating { u, v, w } => u.value(a) + v.value(b[0]) + w.value(x - a - b[0]),
        }
    }

    /// Gradient of `U` in `b`.
    pub fn grad_b(&self, a: f64, b: &[f64], x: f64) -> DVector<f64> {
        match &self.family {
            Family::AdditiveSeparable { v, kv, .. } => {
                DVector::from_iterator(b.len(), b.iter().map(|bk| v.d1(bk - kv * x)))
            }
            Family::RiskNeutral { q, h, w, wa, .. } => {
                let Some(xi) = self.noise(x) else {
                    return DVector::from_element(b.len(), f64::NAN);
                };
                let bv = DVector::from_column_slice(b);
                -(q * bv) + h * a + (w + wa * a) * xi
            }
            Family::ConsumptionSavings {
                u2, u3, beta, r, ..
            } => DVector::from_element(
                1,
                -beta * u2.d1(r * a - b[0]) + beta * beta * x * u3.d1(b[0] * x),
            ),
            Family::GlobalWarming { gamma, eta, .. } => {
                DVector::from_element(1, (1.0 - x) * gjt_v1(*gamma, *eta, b[0] - x * (a + b[0])))
            }
            Family::CakeEating { v, w, .. } => {
                DVector::from_element(1, v.d1(b[0]) - w.d1(x - a - b[0]))
            }
        }
    }

    /// Hessian of `U` in `b`.
    pub fn hess_b(&self, a: f64, b: &[f64], x: f64) -> DMatrix<f64> {
        match &self.family {
            Family::AdditiveSeparable { v, kv, .. } => DMatrix::from_diagonal(
                &DVector::from_iterator(b.len(), b.iter().map(|bk| v.d2(bk - kv * x))),
            ),
            Family::RiskNeutral { q, .. } => -q.clone(),
            Family::ConsumptionSavings {
                u2, u3, beta, r, ..
            } => DMatrix::from_element(
                1,
                1,
                beta * u2.d2(r * a - b[0]) + beta * beta * x * x * u3.d2(b[0] * x),
            ),
            Family::GlobalWarming { gamma, eta, .. } => DMatrix::from_element(
                1,
                1,
                (1.0 - x).powi(2) * gjt_v2(*gamma, *eta, b[0] - x * (a + b[0])),
            ),
            Family::CakeEating { v, w, .. } => {
                DMatrix::from_element(1, 1, v.d2(b[0]) + w.d2(x - a - b[0]))
            }
        }
    }

    pub fn to_decision_model(self: &Arc<Self>) -> Result<DecisionModel> {
        let u = Arc::clone(self);
        let f = Arc::clone(self);
        Ok(DecisionModel::new(
            self.states.clone(),
            self.first_interval,
            self.b_dim,
            move |a, b, x| u.utility(a, b, x),
            move |a| f.feasible(a),
        )?
        .with_unimodal(self.is_concave_in_b()))
    }
}

/// Build the decision model described by `spec`.
pub fn build_model(spec: &FamilySpec) -> Result<DecisionModel> {
    Arc::new(ZooModel::new(spec)?).to_decision_model()
}
