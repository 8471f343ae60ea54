//! Two-stage decisions with learning.
//!
//! The agent picks `a` in an interval, observes a signal, updates to a
//! posterior and then picks `b` in `B(a)`. For a belief `rho` the best
//! second-stage payoff is the Epstein functional
//! `J(a, rho) = max_{b in B(a)} sum_i rho_i U(a, b, x_i)`, which is the support
//! function of the payoff set `Lambda(a)`. The value of a signal is the
//! `nu`-average of `J` over its posteriors, and the second-period value of
//! information is the difference of two such values.

pub mod search;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PayoffSet;
use crate::prob::{Dist, JointSignalModel, StateSpace, NORMALIZATION_TOL};

use search::{golden_max, linspace, sanitize};

/// `U(a, b, x)`.
pub type Utility = Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;
/// `a -> B(a)`.
pub type FeasibleMap = Arc<dyn Fn(f64) -> FeasibleSet + Send + Sync>;

/// Second-stage feasible set for a given first decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibleSet {
    /// Explicit list of second decisions.
    Finite(Vec<Vec<f64>>),
    /// Product of closed intervals, one per coordinate.
    Box(Vec<(f64, f64)>),
}

impl FeasibleSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        FeasibleSet::Box(vec![(lo, hi)])
    }

    pub fn points(values: &[f64]) -> Self {
        FeasibleSet::Finite(values.iter().map(|&v| vec![v]).collect())
    }

    fn validate(&self, b_dim: usize) -> Result<()> {
        match self {
            FeasibleSet::Finite(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidModel("empty second-stage set".into()));
                }
                if let Some(b) = list.iter().find(|b| b.len() != b_dim) {
                    return Err(Error::DimensionMismatch {
                        expected: b_dim,
                        got: b.len(),
                    });
                }
            }
            FeasibleSet::Box(bounds) => {
                if bounds.len() != b_dim {
                    return Err(Error::DimensionMismatch {
                        expected: b_dim,
                        got: bounds.len(),
                    });
                }
                if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi)) {
                    return Err(Error::InvalidModel(format!("empty box side [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }

    /// Whether `b` lies in the set, up to `tol` for boxes.
    pub fn contains(&self, b: &[f64], tol: f64) -> bool {
        match self {
            FeasibleSet::Finite(list) => list
                .iter()
                .any(|p| p.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)),
            FeasibleSet::Box(bounds) => bounds
                .iter()
                .zip(b)
                .all(|((lo, hi), v)| *v >= lo - tol && *v <= hi + tol),
        }
    }

    /// Grid points for boxes, the list itself otherwise.
    pub fn grid_points(&self, per_coord: usize) -> Vec<Vec<f64>> {
        match self {
            FeasibleSet::Finite(list) => list.clone(),
            FeasibleSet::Box(bounds) => {
                let axes: Vec<Vec<f64>> = bounds
                    .iter()
                    .map(|(lo, hi)| {
                        if lo == hi {
                            vec![*lo]
                        } else {
                            linspace(*lo, *hi, per_coord)
                        }
                    })
                    .collect();
                let mut out = vec![Vec::with_capacity(axes.len())];
                for axis in &axes {
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            axis.iter().map(move |v| {
                                let mut p = prefix.clone();
                                p.push(*v);
                                p
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }
}

/// A two-stage decision problem over a finite state space.
#[derive(Clone)]
pub struct DecisionModel {
    states: StateSpace,
    first_interval: (f64, f64),
    b_dim: usize,
    utility: Utility,
    feasible: FeasibleMap,
    unimodal: bool,
}

impl fmt::Debug for DecisionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecisionModel")
            .field("states", &self.states)
            .field("first_interval", &self.first_interval)
            .field("b_dim", &self.b_dim)
            .field("unimodal", &self.unimodal)
            .finish_non_exhaustive()
    }
}

impl DecisionModel {
    pub fn new<U, B>(
        states: StateSpace,
        first_interval: (f64, f64),
        b_dim: usize,
        utility: U,
        feasible: B,
    ) -> Result<Self>
    where
        U: Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> FeasibleSet + Send + Sync + 'static,
    {
        let (lo, hi) = first_interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidModel(format!(
                "first-stage interval [{lo}, {hi}]"
            )));
        }
        if b_dim == 0 {
            return Err(Error::InvalidModel(
                "second decision has dimension 0".into(),
            ));
        }
        let model = Self {
            states,
            first_interval,
            b_dim,
            utility: Arc::new(utility),
            feasible: Arc::new(feasible),
            unimodal: false,
        };
        model.feasible_at(lo)?;
        model.feasible_at(hi)?;
        Ok(model)
    }

    /// Same second-stage set for every first decision.
    pub fn with_fixed_set<U>(
        states: StateSpace,
        first_interval: (f64, f64),
        set: FeasibleSet,
        utility: U,
    ) -> Result<Self>
    where
        U: Fn(f64, &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        let b_dim = match &set {
            FeasibleSet::Finite(list) => list.first().map_or(1, Vec::len),
            FeasibleSet::Box(bounds) => bounds.len(),
        };
        Self::new(states, first_interval, b_dim, utility, move |_| set.clone())
    }

    /// Declare every coordinate section of `b -> E_rho U(a, b, .)` unimodal,
    /// which enables golden-section refinement after the grid scan.
    pub fn with_unimodal(mut self, unimodal: bool) -> Self {
        self.unimodal = unimodal;
        self
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

    pub fn is_unimodal(&self) -> bool {
        self.unimodal
    }

    pub fn utility(&self, a: f64, b: &[f64], x: f64) -> f64 {
        (self.utility)(a, b, x)
    }

    pub fn check_first(&self, a: f64) -> Result<()> {
        let (lo, hi) = self.first_interval;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(a >= lo - slack && a <= hi + slack) {
            return Err(Error::InfeasibleFirstDecision { a, lo, hi });
        }
        Ok(())
    }

    pub fn feasible_at(&self, a: f64) -> Result<FeasibleSet> {
        self.check_first(a)?;
        let set = (self.feasible)(a);
        set.validate(self.b_dim)?;
        Ok(set)
    }

    /// `sum_i rho_i U(a, b, x_i)`, skipping null states.
    pub fn expected_utility(&self, a: f64, b: &[f64], rho: &[f64]) -> f64 {
        self.states
            .values()
            .iter()
            .zip(rho)
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, p)| p * self.utility(a, b, *x))
            .sum()
    }

    pub fn payoff_vector(&self, a: f64, b: &[f64]) -> Vec<f64> {
        self.states
            .values()
            .iter()
            .map(|x| self.utility(a, b, *x))
            .collect()
    }
}

/// Numerical settings for the inner and outer maximizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Points of the first-stage grid.
    pub a_grid: usize,
    /// Grid points per coordinate of a box-shaped second-stage set.
    pub b_grid: usize,
    /// Golden-section iterations per line search.
    pub refine_iters: usize,
    /// Coordinate sweeps for multi-dimensional second decisions.
    pub coord_sweeps: usize,
    /// Values within this of the best count as maximizers.
    pub value_tol: f64,
    /// Slack in the maximizer ranking. `None` means one first-stage grid step.
    pub arg_tol: Option<f64>,
    /// Tolerance of the monotonicity scan of the value of information.
    pub scan_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            a_grid: 101,
            b_grid: 41,
            refine_iters: 100,
            coord_sweeps: 8,
            value_tol: 1e-9,
            arg_tol: None,
            scan_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.a_grid < 2 || self.b_grid < 2 {
            return Err(Error::InvalidSolver("grids need at least 2 points".into()));
        }
        let tols = [Some(self.value_tol), self.arg_tol, Some(self.scan_tol)];
        if tols.iter().flatten().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidSolver("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn a_step(&self, interval: (f64, f64)) -> f64 {
        (interval.1 - interval.0) / (self.a_grid.max(2) - 1) as f64
    }

    pub fn resolved_arg_tol(&self, interval: (f64, f64)) -> f64 {
        self.arg_tol.unwrap_or_else(|| self.a_step(interval))
    }
}

/// Maximizer of the inner problem for one belief.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub value: f64,
    pub b: Vec<f64>,
    pub refined: bool,
}

/// `Lambda(a)`: one payoff vector per listed decision or per grid point.
pub fn payoff_set(model: &DecisionModel, a: f64, cfg: &SolverConfig) -> Result<PayoffSet> {
    let set = model.feasible_at(a)?;
    let vectors = set
        .grid_points(cfg.b_grid)
        .iter()
        .map(|b| model.payoff_vector(a, b))
        .collect();
    PayoffSet::new(vectors)
}

/// Best second decision for belief `rho`.
pub fn inner_solve(
    model: &DecisionModel,
    a: f64,
    rho: &Dist,
    cfg: &SolverConfig,
) -> Result<InnerSolution> {
    if rho.dim() != model.states().len() {
        return Err(Error::DimensionMismatch {
            expected: model.states().len(),
            got: rho.dim(),
        });
    }
    let set = model.feasible_at(a)?;
    let probs = rho.probs();
    Ok(maximize_over(
        &set,
        |b| model.expected_utility(a, b, probs),
        cfg,
        model.is_unimodal(),
    ))
}

/// Maximize `objective` over a second-stage set: enumeration for finite sets,
/// grid scan for boxes, followed by coordinatewise golden-section refinement
/// inside one grid step when `unimodal` holds.
pub fn maximize_over<F>(
    set: &FeasibleSet,
    objective: F,
    cfg: &SolverConfig,
    unimodal: bool,
) -> InnerSolution
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |b: &[f64]| sanitize(objective(b));
    let mut best_b: Vec<f64> = Vec::new();
    let mut best_v = f64::NEG_INFINITY;
    for b in set.grid_points(cfg.b_grid) {
        let v = eval(&b);
        if best_b.is_empty() || v > best_v {
            best_v = v;
            best_b = b;
        }
    }

    let bounds = match (set, unimodal) {
        (FeasibleSet::Box(bounds), true) => bounds,
        _ => {
            return InnerSolution {
                value: best_v,
                b: best_b,
                refined: false,
            }
        }
    };

    let steps: Vec<f64> = bounds
        .iter()
        .map(|(lo, hi)| (hi - lo) / (cfg.b_grid - 1) as f64)
        .collect();
    let sweeps = if bounds.len() == 1 {
        1
    } else {
        cfg.coord_sweeps.max(1)
    };
    let mut b = best_b;
    let mut v = best_v;
    for _ in 0..sweeps {
        for k in 0..bounds.len() {
            let (lo, hi) = bounds[k];
            if steps[k] == 0.0 {
                continue;
            }
            let left = (b[k] - steps[k]).max(lo);
            let right = (b[k] + steps[k]).min(hi);
            let xtol = 1e-13 * (1.0 + b[k].abs());
            let mut trial = b.clone();
            let (xk, vk) = golden_max(
                |t| {
                    trial[k] = t;
                    eval(&trial)
                },
                left,
                right,
                cfg.refine_iters,
                xtol,
            );
            if vk > v {
                v = vk;
                b[k] = xk;
            }
        }
    }
    InnerSolution {
        value: v,
        b,
        refined: true,
    }
}

/// The Epstein functional `J(a, rho)`.
pub fn epstein_j(model: &DecisionModel, a: f64, rho: &Dist, cfg: &SolverConfig) -> Result<f64> {
    inner_solve(model, a, rho, cfg).map(|s| s.value)
}

fn check_states(model: &DecisionModel, sig: &JointSignalModel) -> Result<()> {
    if model.states() != sig.states() {
        return Err(Error::StateMismatch);
    }
    Ok(())
}

/// `V^Y(a) = sum_j nu_j J(a, P(X | Y = y_j))`.
pub fn signal_value(
    model: &DecisionModel,
    a: f64,
    sig: &JointSignalModel,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_states(model, sig)?;
    model.check_first(a)?;
    let mut total = 0.0;
    for (nu, post) in sig.posteriors() {
        total += nu * epstein_j(model, a, &post, cfg)?;
    }
    Ok(total)
}

/// Second-period value of information `V^Y(a) - V^Y'(a)`.
pub fn delta_value(
    model: &DecisionModel,
    a: f64,
    finer: &JointSignalModel,
    coarser: &JointSignalModel,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_states(model, finer)?;
    check_states(model, coarser)?;
    finer.check_same_prior(coarser, NORMALIZATION_TOL)?;
    Ok(signal_value(model, a, finer, cfg)? - signal_value(model, a, coarser, cfg)?)
}

/// Maximizers of the first-stage program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    /// Every grid or refined point within `value_tol` of the best, ascending.
    pub maximizers: Vec<f64>,
    pub value: f64,
    /// False when the inner problem was only grid-searched.
    pub inner_refined: bool,
}

impl OptResult {
    pub fn sup(&self) -> f64 {
        *self.maximizers.last().expect("maximizers are nonempty")
    }

    pub fn inf(&self) -> f64 {
        self.maximizers[0]
    }
}

/// `V^Y` on the first-stage grid.
pub fn value_profile(
    model: &DecisionModel,
    sig: &JointSignalModel,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    check_states(model, sig)?;
    let (lo, hi) = model.first_interval();
    let grid = if lo == hi {
        vec![lo]
    } else {
        linspace(lo, hi, cfg.a_grid)
    };
    let values = grid
        .par_iter()
        .map(|&a| signal_value(model, a, sig, cfg))
        .collect::<Result<Vec<f64>>>()?;
    Ok((grid, values))
}

fn optimize_from_profile(
    model: &DecisionModel,
    sig: &JointSignalModel,
    cfg: &SolverConfig,
    grid: &[f64],
    values: &[f64],
) -> Result<OptResult> {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if sanitize(*v) > sanitize(values[best]) {
            best = k;
        }
    }
    let grid_best = sanitize(values[best]);
    let (lo, hi) = model.first_interval();
    let step = if grid.len() > 1 {
        grid[1] - grid[0]
    } else {
        0.0
    };

    let mut refined = None;
    if step > 0.0 {
        let left = (grid[best] - step).max(lo);
        let right = (grid[best] + step).min(hi);
        let mut failure = None;
        let (a_ref, v_ref) = golden_max(
            |a| match signal_value(model, a, sig, cfg) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            left,
            right,
            cfg.refine_iters,
            1e-12 * (1.0 + grid[best].abs()),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if v_ref > grid_best {
            refined = Some((a_ref, v_ref));
        }
    }

    let value = refined.map_or(grid_best, |(_, v)| v);
    let mut maximizers: Vec<f64> = grid
        .iter()
        .zip(values)
        .filter(|(_, v)| sanitize(**v) >= value - cfg.value_tol)
        .map(|(a, _)| *a)
        .collect();
    if let Some((a, _)) = refined {
        maximizers.push(a);
    }
    maximizers.sort_by(f64::total_cmp);
    maximizers.dedup();
    let inner_refined =
        model.is_unimodal() && matches!(model.feasible_at(grid[best])?, FeasibleSet::Box(_));
    Ok(OptResult {
        maximizers,
        value,
        inner_refined,
    })
}

/// Solve `max_a V^Y(a)` by grid scan plus golden-section refinement around
/// the leftmost best grid point.
pub fn optimize_first(
    model: &DecisionModel,
    sig: &JointSignalModel,
    cfg: &SolverConfig,
) -> Result<OptResult> {
    let (grid, values) = value_profile(model, sig, cfg)?;
    optimize_from_profile(model, sig, cfg, &grid, &values)
}

/// Shape of a sequence sampled on an ascending grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Monotonicity {
    Constant,
    NonIncreasing {
        strict: bool,
    },
    NonDecreasing {
        strict: bool,
    },
    /// Index pairs of the largest rise and the largest fall.
    NonMonotone {
        rise: (usize, usize),
        fall: (usize, usize),
    },
}

impl Monotonicity {
    pub fn label(&self) -> &'static str {
        match self {
            Monotonicity::Constant => "constant",
            Monotonicity::NonIncreasing { strict: true } => "decreasing",
            Monotonicity::NonIncreasing { strict: false } => "non_increasing",
            Monotonicity::NonDecreasing { strict: true } => "increasing",
            Monotonicity::NonDecreasing { strict: false } => "non_decreasing",
            Monotonicity::NonMonotone { .. } => "non_monotone",
        }
    }

    /// Weakly decreasing, which is what the maximizer ranking needs.
    pub fn is_non_increasing(&self) -> bool {
        matches!(
            self,
            Monotonicity::Constant | Monotonicity::NonIncreasing { .. }
        )
    }
}

/// Classify `values`; steps within `tol` count as flat.
///
/// Sequences shorter than two points are reported as constant.
pub fn monotonicity_scan(values: &[f64], tol: f64) -> Monotonicity {
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let total_variation: f64 = steps.iter().map(|s| s.abs()).sum();
    if steps.is_empty() || total_variation <= tol {
        return Monotonicity::Constant;
    }
    let (mut rise, mut fall) = (0, 0);
    for (k, s) in steps.iter().enumerate() {
        if *s > steps[rise] {
            rise = k;
        }
        if *s < steps[fall] {
            fall = k;
        }
    }
    let rises = steps[rise] > tol;
    let falls = steps[fall] < -tol;
    match (rises, falls) {
        (true, true) => Monotonicity::NonMonotone {
            rise: (rise, rise + 1),
            fall: (fall, fall + 1),
        },
        (false, _) => Monotonicity::NonIncreasing {
            strict: steps.iter().all(|s| *s < -tol),
        },
        (true, false) => Monotonicity::NonDecreasing {
            strict: steps.iter().all(|s| *s > tol),
        },
    }
}

/// Comparison of first-stage decisions under a finer and a coarser signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecautionReport {
    pub a_star_finer: OptResult,
    pub a_star_coarser: OptResult,
    pub grid: Vec<f64>,
    pub value_finer: Vec<f64>,
    pub value_coarser: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_scan: Monotonicity,
    pub arg_tol: f64,
    /// `sup argmax V^Y <= sup argmax V^Y' + arg_tol`.
    pub ranking_holds: bool,
    /// `sup argmax V^Y <= inf argmax V^Y' + arg_tol`.
    pub strict_ranking_holds: bool,
    /// The value of information is weakly decreasing on the grid, so the
    /// sup-ranking is predicted.
    pub ranking_predicted: bool,
}

impl PrecautionReport {
    /// Rows `a, V_Y, V_Y2, delta, delta_verdict, ranking_holds` as RFC 4180 CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "a",
            "V_Y",
            "V_Y2",
            "delta",
            "delta_verdict",
            "ranking_holds",
        ])?;
        for k in 0..self.grid.len() {
            w.write_record([
                self.grid[k].to_string(),
                self.value_finer[k].to_string(),
                self.value_coarser[k].to_string(),
                self.delta[k].to_string(),
                self.delta_scan.label().to_string(),
                self.ranking_holds.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Optimize under both signals and scan the value of information.
pub fn precautionary_compare(
    model: &DecisionModel,
    finer: &JointSignalModel,
    coarser: &JointSignalModel,
    cfg: &SolverConfig,
) -> Result<PrecautionReport> {
    check_states(model, finer)?;
    check_states(model, coarser)?;
    finer.check_same_prior(coarser, NORMALIZATION_TOL)?;
    let (grid, value_finer) = value_profile(model, finer, cfg)?;
    let (_, value_coarser) = value_profile(model, coarser, cfg)?;
    let a_star_finer = optimize_from_profile(model, finer, cfg, &grid, &value_finer)?;
    let a_star_coarser = optimize_from_profile(model, coarser, cfg, &grid, &value_coarser)?;
    let delta: Vec<f64> = value_finer
        .iter()
        .zip(&value_coarser)
        .map(|(f, c)| f - c)
        .collect();
    let delta_scan = monotonicity_scan(&delta, cfg.scan_tol);
    let arg_tol = cfg.resolved_arg_tol(model.first_interval());
    let ranking_holds = a_star_finer.sup() <= a_star_coarser.sup() + arg_tol;
    let strict_ranking_holds = a_star_finer.sup() <= a_star_coarser.inf() + arg_tol;
    let ranking_predicted = delta_scan.is_non_increasing();
    Ok(PrecautionReport {
        a_star_finer,
        a_star_coarser,
        grid,
        value_finer,
        value_coarser,
        delta,
        delta_scan,
        arg_tol,
        ranking_holds,
        strict_ranking_holds,
        ranking_predicted,
    })
}
