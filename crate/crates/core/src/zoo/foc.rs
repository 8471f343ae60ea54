//! First-order certificates `(M, b0)` with `M dU/db(a1, b1, x) = dU/db(a0, b0, x)`
//! for every state, solved per family in closed form or by bracketed root
//! finding.
//!
//! Besides the first-order residual the certificate reports the curvature of
//! `h(b, x) = U(a1, b1 + M'(b - b0), x) - U(a0, b, x)` at `b0`. When `h` has a
//! minimum at `b0` in every state the payoff difference decomposes with a
//! convex support function. When it has a maximum in every state the same
//! construction yields a concave one.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::families::{gjt_v1, Family, FamilySpec, ZooModel};
use crate::decision::search::bisect;
use crate::decision::FeasibleSet;
use crate::error::{Error, Result};

/// Largest admissible first-order residual.
pub const FOC_TOL: f64 = 1e-8;
/// Slack for curvature signs and for boundary detection.
pub const CURVATURE_TOL: f64 = 1e-10;
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocCertificate {
    /// Row-major `n x n`.
    pub m: Vec<Vec<f64>>,
    pub b0: Vec<f64>,
    /// `max_x |M grad U(a1, b1, x) - grad U(a0, b0, x)|`, relative to
    /// `1 + max(|M grad U(a1, b1, x)|, |grad U(a0, b0, x)|)`.
    pub residual: f64,
    /// Family constants solved along the way (`alpha`, `beta`, ...).
    pub constants: BTreeMap<String, f64>,
    pub b0_feasible: bool,
    /// Some coordinate of `b1` sits on a bound of `B(a1)`.
    pub near_boundary: bool,
    /// The affine map `b -> b1 + M'(b - b0)` sends `B(a0)` near `b0` into `B(a1)`.
    pub neighborhood_ok: bool,
    /// Smallest and largest eigenvalue of `M H1 M' - H0` over the grid.
    pub curvature_min: f64,
    pub curvature_max: f64,
    /// Minimum of `h` at `b0`: the difference of support functions is convex.
    pub passed: bool,
    /// The inverse map `b -> b0 + M'^-1 (b - b1)` sends `B(a1)` near `b1` into `B(a0)`.
    pub reverse_neighborhood_ok: bool,
    /// Maximum of `h` at `b0`: the roles of `a1` and `a0` swap and the
    /// difference of support functions is concave.
    pub reverse_passed: bool,
}

impl FocCertificate {
    pub fn m_matrix(&self) -> DMatrix<f64> {
        let n = self.m.len();
        DMatrix::from_fn(n, n, |i, j| self.m[i][j])
    }
}

pub(crate) struct Solution {
    pub(crate) m: DMatrix<f64>,
    pub(crate) b0: Vec<f64>,
    pub(crate) constants: BTreeMap<String, f64>,
}

fn scalar(m: f64, b0: f64, constants: &[(&str, f64)]) -> Solution {
    Solution {
        m: DMatrix::from_element(1, 1, m),
        b0: vec![b0],
        constants: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn no_cert(msg: impl Into<String>) -> Error {
    Error::NoCertificate(msg.into())
}

fn root(f: impl FnMut(f64) -> f64, lo: f64, hi: f64, what: &str) -> Result<f64> {
    bisect(f, lo, hi, 1e-15)
        .ok_or_else(|| no_cert(format!("{what}: no sign change on [{lo}, {hi}]")))
}

pub(crate) fn solve(z: &ZooModel, a1: f64, a0: f64, b1: &[f64]) -> Result<Solution> {
    match &z.family {
        Family::AdditiveSeparable { .. } => Ok(Solution {
            m: DMatrix::identity(b1.len(), b1.len()),
            b0: b1.to_vec(),
            constants: BTreeMap::new(),
        }),
        Family::RiskNeutral { q, h, w, wa, .. } => {
            let a_1 = w + wa * a1;
            let a_0 = w + wa * a0;
            let eig = SymmetricEigen::new(q.clone());
            let sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
                * eig.eigenvectors.transpose();
            let sqrt_inv = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
                * eig.eigenvectors.transpose();
            let c1 = &sqrt_inv * &a_1;
            let c0 = &sqrt_inv * &a_0;
            let pinv = c1
                .clone()
                .pseudo_inverse(1e-12)
                .map_err(|e| no_cert(e.to_string()))?;
            let n = &c0 * pinv;
            let m = &sqrt * n * &sqrt_inv;
            let gap = (&m * &a_1 - &a_0).amax();
            if gap > FOC_TOL {
                return Err(no_cert(format!("M A1 = A0 is inconsistent (gap {gap:e})")));
            }
            let b1v = DVector::from_column_slice(b1);
            let rhs = h * a0 - &m * (-(q * b1v) + h * a1);
            let b0 = q
                .clone()
                .cholesky()
                .expect("validated positive definite")
                .solve(&rhs);
            Ok(Solution {
                m,
                b0: b0.iter().copied().collect(),
                constants: BTreeMap::new(),
            })
        }
        Family::ConsumptionSavings { u2, u3, r, .. } => {
            let g = u3
                .marginal_exponent()
                .ok_or_else(|| no_cert("u3 has no power-law marginal utility"))?;
            let b = b1[0];
            let top = (1.0 - 1e-12) * r * a0 / b;
            let compat =
                |alpha: f64| alpha.powf(-g) * u2.d1(r * a1 - b) - u2.d1(r * a0 - alpha * b);
            let alpha = root(compat, 1e-12 * top, top, "compatibility condition")?;
            let m = alpha.powf(-g);
            Ok(scalar(m, alpha * b, &[("alpha", alpha), ("M", m)]))
        }
        Family::GlobalWarming { gamma, eta, .. } => {
            let ge = gamma * eta;
            let alpha = (ge - a0) / (ge - a1);
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(no_cert(format!(
                    "scaling constant alpha = (gamma eta - a0)/(gamma eta - a1) = {alpha} is not positive"
                )));
            }
            let b0 = alpha * b1[0] + ge * (alpha - 1.0);
            let m = alpha.powf(-gamma);
            Ok(scalar(m, b0, &[("alpha", alpha), ("M", m)]))
        }
        Family::CakeEating { v, w, .. } => {
            let (lo, hi) = match z.feasible(a0) {
                FeasibleSet::Box(bx) => bx[0],
                FeasibleSet::Finite(_) => {
                    return Err(no_cert("cake eating needs a box-shaped second-stage set"))
                }
            };
            let b = b1[0];
            match *w {
                super::CatalogFn::Exp { eta } => {
                    let f = |b0: f64| (eta * (a0 + b0 - a1 - b)).exp() * v.d1(b) - v.d1(b0);
                    let b0 = root(f, lo, hi, "marginal compatibility")?;
                    let beta = a0 + b0 - a1 - b;
                    let m = (eta * beta).exp();
                    Ok(scalar(m, b0, &[("beta", beta), ("M", m), ("kappa", 0.0)]))
                }
                super::CatalogFn::Quadratic { .. } => {
                    let f = |b0: f64| v.d1(b) - v.d1(b0) + 2.0 * (a0 + b0 - a1 - b);
                    let b0 = root(f, lo, hi, "marginal compatibility")?;
                    let beta = a0 + b0 - a1 - b;
                    Ok(scalar(
                        1.0,
                        b0,
                        &[("beta", beta), ("M", 1.0), ("kappa", 2.0 * beta)],
                    ))
                }
                _ => Err(no_cert("w must be exponential or quadratic")),
            }
        }
    }
}

/// Active-bound pattern of `b` in a box: -1 lower, +1 upper, 0 interior.
fn active(bounds: &[(f64, f64)], b: &[f64]) -> Vec<i8> {
    bounds
        .iter()
        .zip(b)
        .map(|((lo, hi), v)| {
            if (v - lo).abs() <= BOUNDARY_TOL * (1.0 + lo.abs()) {
                -1
            } else if (v - hi).abs() <= BOUNDARY_TOL * (1.0 + hi.abs()) {
                1
            } else {
                0
            }
        })
        .collect()
}

/// Every feasible direction at `b0` in `B(a0)` must map under `M'` to a
/// feasible direction at `b1` in `B(a1)`. Checking the cone generators is enough.
fn neighborhood(
    m: &DMatrix<f64>,
    set0: &FeasibleSet,
    b0: &[f64],
    set1: &FeasibleSet,
    b1: &[f64],
) -> (bool, bool) {
    let (FeasibleSet::Box(bx0), FeasibleSet::Box(bx1)) = (set0, set1) else {
        return (false, true);
    };
    let act1 = active(bx1, b1);
    let near = act1.iter().any(|s| *s != 0);
    if !near {
        return (false, true);
    }
    let act0 = active(bx0, b0);
    let n = b0.len();
    let mut generators = Vec::new();
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        match act0[j] {
            -1 => generators.push(e),
            1 => generators.push(-e),
            _ => {
                generators.push(e.clone());
                generators.push(-e);
            }
        }
    }
    let mt = m.transpose();
    let scale = 1e-12 * (1.0 + m.amax());
    let ok = generators.iter().all(|g| {
        let d = &mt * g;
        act1.iter().enumerate().all(|(k, s)| match s {
            -1 => d[k] >= -scale,
            1 => d[k] <= scale,
            _ => true,
        })
    });
    (true, ok)
}

/// Solve the first-order condition at `(a1, a0, b1)` and evaluate it on `x_grid`.
pub fn foc_certificate(
    spec: &FamilySpec,
    a1: f64,
    a0: f64,
    b1: &[f64],
    x_grid: &[f64],
) -> Result<FocCertificate> {
    foc_certificate_for(&ZooModel::new(spec)?, a1, a0, b1, x_grid)
}

pub fn foc_certificate_for(
    z: &ZooModel,
    a1: f64,
    a0: f64,
    b1: &[f64],
    x_grid: &[f64],
) -> Result<FocCertificate> {
    let (lo, hi) = z.first_interval();
    for (name, a) in [("a1", a1), ("a0", a0)] {
        if !(a >= lo && a <= hi) {
            return Err(Error::domain(
                name,
                format!("{a} lies outside [{lo}, {hi}]"),
            ));
        }
    }
    if !(a1 > a0) {
        return Err(Error::domain("a1", "must exceed a0"));
    }
    if b1.len() != z.b_dim() {
        return Err(Error::DimensionMismatch {
            expected: z.b_dim(),
            got: b1.len(),
        });
    }
    let set1 = z.feasible(a1);
    if !set1.contains(b1, 1e-12) {
        return Err(Error::domain("b1", format!("{b1:?} is not in B(a1)")));
    }
    if x_grid.is_empty() {
        return Err(Error::domain("x_grid", "is empty"));
    }

    let Solution { m, b0, constants } = solve(z, a1, a0, b1)?;
    let set0 = z.feasible(a0);
    let b0_feasible = set0.contains(
        &b0,
        1e-10 * (1.0 + b0.iter().fold(0.0_f64, |s, v| s.max(v.abs()))),
    );

    let mut residual = 0.0_f64;
    let mut curvature_min = f64::INFINITY;
    let mut curvature_max = f64::NEG_INFINITY;
    for &x in x_grid {
        let g1 = z.grad_b(a1, b1, x);
        let g0 = z.grad_b(a0, &b0, x);
        let mg1 = &m * g1;
        let r = (&mg1 - &g0).amax() / (1.0 + mg1.amax().max(g0.amax()));
        if !r.is_finite() {
            return Err(Error::domain(
                "x_grid",
                format!("derivative undefined at x = {x}"),
            ));
        }
        residual = residual.max(r);
        let h1 = z.hess_b(a1, b1, x);
        let h0 = z.hess_b(a0, &b0, x);
        let c = &m * h1 * m.transpose() - h0;
        let c = 0.5 * (&c + c.transpose());
        let eig = c.symmetric_eigenvalues();
        curvature_min = curvature_min.min(eig.min());
        curvature_max = curvature_max.max(eig.max());
    }
    if residual > FOC_TOL {
        return Err(no_cert(format!(
            "first-order residual {residual:e} exceeds {FOC_TOL:e}"
        )));
    }
    let (near_boundary, neighborhood_ok) = neighborhood(&m, &set0, &b0, &set1, b1);
    let reverse_neighborhood_ok = match m.clone().try_inverse() {
        Some(inv) => neighborhood(&inv, &set1, b1, &set0, &b0).1,
        None => false,
    };
    Ok(FocCertificate {
        m: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        b0,
        residual,
        constants,
        b0_feasible,
        near_boundary,
        neighborhood_ok,
        curvature_min,
        curvature_max,
        passed: b0_feasible && neighborhood_ok && curvature_min >= -CURVATURE_TOL,
        reverse_neighborhood_ok,
        reverse_passed: b0_feasible && reverse_neighborhood_ok && curvature_max <= CURVATURE_TOL,
    })
}

/// `max_x |v'(alpha x + gamma eta (alpha - 1)) - alpha^exponent v'(x)|` for the
/// global-warming `v`.
pub fn gjt_identity_residual(
    gamma: f64,
    eta: f64,
    alpha: f64,
    exponent: f64,
    x_grid: &[f64],
) -> Result<f64> {
    if !(gamma > 0.0) || gamma == 1.0 {
        return Err(Error::domain(
            "gamma",
            "must be positive and different from 1",
        ));
    }
    if !(eta > 0.0) {
        return Err(Error::domain("eta", "must be positive"));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain("alpha", "must be positive"));
    }
    let mut worst = 0.0_f64;
    for &x in x_grid {
        if !(eta + x / gamma > 0.0) {
            return Err(Error::domain(
                "x_grid",
                format!("eta + x/gamma <= 0 at x = {x}"),
            ));
        }
        let lhs = gjt_v1(gamma, eta, alpha * x + gamma * eta * (alpha - 1.0));
        let rhs = alpha.powf(exponent) * gjt_v1(gamma, eta, x);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Residual of the scaling identity `v'(alpha x + gamma eta (alpha - 1)) = alpha^(-gamma) v'(x)`.
pub fn gjt_identity_check(gamma: f64, eta: f64, alpha: f64, x_grid: &[f64]) -> Result<f64> {
    gjt_identity_residual(gamma, eta, alpha, -gamma, x_grid)
}
