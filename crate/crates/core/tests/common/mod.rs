//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use precaution::geometry::ConvexityKind;
use precaution::seeding::trial_rng;
use precaution::zoo::RiskNeutralMatrices;
use precaution::{
    CatalogFn, DecisionModel, Dist, FamilyKind, FamilySpec, FeasibleSet, Garbling,
    JointSignalModel, PayoffSet, StateSpace,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64, index: u64) -> ChaCha8Rng {
    trial_rng(seed, index)
}

/// `m` distinct sorted states in `[lo, hi]`.
pub fn random_states(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..m)
        .map(|i| lo + (hi - lo) * (i as f64 + rng.random_range(0.1..0.9)) / m as f64)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}

pub fn random_joint(rng: &mut ChaCha8Rng, states: &StateSpace, n: usize) -> JointSignalModel {
    let m = states.len();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(0.01..1.0)).collect())
        .collect();
    let total: f64 = rows.iter().flatten().sum();
    rows.iter_mut().flatten().for_each(|p| *p /= total);
    JointSignalModel::new(states.clone(), rows).unwrap()
}

/// Surjective map of `n` signals onto `1..n` coarse values.
pub fn random_garbling(rng: &mut ChaCha8Rng, n: usize) -> Garbling {
    let k = rng.random_range(1..n.max(2));
    let mut map: Vec<usize> = (0..n)
        .map(|j| if j < k { j } else { rng.random_range(0..k) })
        .collect();
    for i in (1..n).rev() {
        map.swap(i, rng.random_range(0..=i));
    }
    Garbling::new(map, k).unwrap()
}

/// Quadratic-loss model with random coefficients. Finite `B` when `finite`,
/// otherwise the irreversible box `[0, a + 1]`.
pub fn random_model(rng: &mut ChaCha8Rng, m: usize, finite: bool) -> DecisionModel {
    let xs = random_states(rng, m, 0.0, 2.0);
    let states = StateSpace::new(xs).unwrap();
    let [q, t1, t2, t3, t4]: [f64; 5] = [
        rng.random_range(0.5..2.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.1..1.0),
    ];
    let u = move |a: f64, b: &[f64], x: f64| {
        -q * (b[0] - t1 * x - t2 * a).powi(2) + t3 * a * x - t4 * a * a
    };
    if finite {
        let k = rng.random_range(2..7);
        let pts: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..2.0)).collect();
        DecisionModel::with_fixed_set(states, (0.0, 1.0), FeasibleSet::points(&pts), u).unwrap()
    } else {
        DecisionModel::new(states, (0.0, 1.0), 1, u, |a| {
            FeasibleSet::interval(0.0, a + 1.0)
        })
        .unwrap()
        .with_unimodal(true)
    }
}

pub fn random_dist(rng: &mut ChaCha8Rng, m: usize) -> Dist {
    Dist::sample_uniform(m, rng)
}

pub fn random_payoff_set(rng: &mut ChaCha8Rng, m: usize, max_len: usize) -> PayoffSet {
    let k = rng.random_range(1..=max_len);
    PayoffSet::new(
        (0..k)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
    )
    .unwrap()
}

/// `max_b E_rho U(a, b, .)` by enumeration (finite sets) or a two-level grid
/// (one-dimensional boxes): `coarse` points, then `fine` points within one
/// coarse step of the best.
pub fn oracle_j(model: &DecisionModel, a: f64, rho: &[f64], coarse: usize, fine: usize) -> f64 {
    let eval = |b: f64| model.expected_utility(a, &[b], rho);
    match model.feasible_at(a).unwrap() {
        FeasibleSet::Finite(points) => points
            .iter()
            .map(|p| model.expected_utility(a, p, rho))
            .fold(f64::NEG_INFINITY, f64::max),
        FeasibleSet::Box(bounds) => {
            assert_eq!(bounds.len(), 1, "the oracle handles scalar b");
            let (lo, hi) = bounds[0];
            let step = (hi - lo) / (coarse - 1) as f64;
            let mut best = (lo, eval(lo));
            for i in 1..coarse {
                let b = if i == coarse - 1 {
                    hi
                } else {
                    lo + step * i as f64
                };
                let v = eval(b);
                if v > best.1 {
                    best = (b, v);
                }
            }
            let flo = (best.0 - step).max(lo);
            let fhi = (best.0 + step).min(hi);
            for i in 0..fine {
                let b = flo + (fhi - flo) * i as f64 / (fine - 1) as f64;
                best.1 = best.1.max(eval(b));
            }
            best.1
        }
    }
}

pub fn oracle_value(model: &DecisionModel, a: f64, sig: &JointSignalModel) -> f64 {
    sig.posteriors()
        .iter()
        .map(|(p, post)| p * oracle_j(model, a, post.probs(), 401, 401))
        .sum()
}

/// Leftmost best point of the oracle value over `grid`, with its value.
pub fn oracle_argmax(model: &DecisionModel, sig: &JointSignalModel, grid: &[f64]) -> (f64, f64) {
    grid.iter().map(|&a| (a, oracle_value(model, a, sig))).fold(
        (f64::NAN, f64::NEG_INFINITY),
        |best, cur| if cur.1 > best.1 { cur } else { best },
    )
}

/// Exact shape of `p -> sigma_A(p, 1-p) - sigma_B(p, 1-p)` on `[0, 1]` from
/// its slope changes. Jumps with magnitude at most `tol` count as zero.
pub fn kink_oracle(a: &PayoffSet, b: &PayoffSet, tol: f64) -> ConvexityKind {
    let line = |v: &[f64], p: f64| v[0] * p + v[1] * (1.0 - p);
    let sigma = |s: &PayoffSet, p: f64| {
        s.vectors()
            .iter()
            .map(|v| line(v, p))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let f = |p: f64| sigma(a, p) - sigma(b, p);
    let mut cuts = vec![0.0, 1.0];
    for s in [a, b] {
        let vs = s.vectors();
        for i in 0..vs.len() {
            for j in (i + 1)..vs.len() {
                // Crossing of the two lines in p.
                let di = (vs[i][0] - vs[i][1]) - (vs[j][0] - vs[j][1]);
                if di.abs() > 1e-15 {
                    let p = (vs[j][1] - vs[i][1]) / di;
                    if p > 0.0 && p < 1.0 {
                        cuts.push(p);
                    }
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let slopes: Vec<f64> = cuts
        .windows(2)
        .map(|w| (f(w[1]) - f(w[0])) / (w[1] - w[0]))
        .collect();
    let jumps: Vec<f64> = slopes.windows(2).map(|s| s[1] - s[0]).collect();
    let up = jumps.iter().any(|j| *j > tol);
    let down = jumps.iter().any(|j| *j < -tol);
    match (up, down) {
        (false, false) => ConvexityKind::Affine,
        (true, false) => ConvexityKind::Convex,
        (false, true) => ConvexityKind::Concave,
        (true, true) => ConvexityKind::Neither,
    }
}

pub fn consumption_savings(rng: &mut ChaCha8Rng, gamma: f64, gamma2: f64) -> FamilySpec {
    let m = rng.random_range(2..=4);
    let xs = random_states(rng, m, 0.5, 1.6);
    let u1 = if rng.random_bool(0.5) {
        CatalogFn::Log
    } else {
        CatalogFn::Crra {
            gamma: rng.random_range(1.5..3.0),
        }
    };
    let w = rng.random_range(1.5..3.0);
    FamilySpec::new(FamilyKind::ConsumptionSavings, xs, (0.1 * w, 0.9 * w))
        .param("w", w)
        .param("beta", rng.random_range(0.85..0.99))
        .param("r", rng.random_range(1.0..2.0))
        .function("u1", u1)
        .function("u2", CatalogFn::Crra { gamma: gamma2 })
        .function("u3", CatalogFn::Crra { gamma })
}

/// Global-warming instance whose damage states straddle 1, so the second
/// decision trades off and information has value. The box ends and `eta` put
/// both extreme corners just inside the domain of `v`, so marginal utility
/// blows up at either end of the box.
pub fn global_warming(rng: &mut ChaCha8Rng, gamma: f64) -> FamilySpec {
    let m = rng.random_range(2..=3);
    let mut xs = random_states(rng, m, 0.3, 1.7);
    xs[0] = xs[0].min(0.8);
    xs[m - 1] = xs[m - 1].max(1.2);
    let (x_lo, x_hi) = (xs[0], xs[m - 1]);
    let (a_lo, a_hi) = (0.1, 1.0);
    let b_hi = rng.random_range(4.0..8.0);
    // Same z at (b_hi, x_hi, a_hi) and (b_lo, x_lo, a_hi).
    let z_edge = b_hi * (1.0 - x_hi) - x_hi * a_hi;
    let b_lo = (z_edge + x_lo * a_hi) / (1.0 - x_lo);
    let eta = -z_edge / gamma + rng.random_range(1e-3..5e-2);
    FamilySpec::new(FamilyKind::GlobalWarming, xs, (a_lo, a_hi))
        .param("gamma", gamma)
        .param("eta", eta)
        .function(
            "u",
            CatalogFn::Quadratic {
                c: rng.random_range(0.6..1.5),
            },
        )
        .with_box(vec![(b_lo, b_hi)])
}

/// Uniform draw on the simplex pulled halfway to the center.
pub fn moderate_prior(rng: &mut ChaCha8Rng, m: usize) -> Dist {
    random_dist(rng, m).mix(&Dist::uniform(m), 0.5).unwrap()
}

/// A noisy signal that reports the true state with probability `acc`.
pub fn noisy_signal(states: &StateSpace, prior: &Dist, acc: f64) -> JointSignalModel {
    let m = states.len();
    let off = (1.0 - acc) / (m - 1) as f64;
    let rows = (0..m)
        .map(|y| {
            (0..m)
                .map(|i| prior.probs()[i] * if i == y { acc } else { off })
                .collect()
        })
        .collect();
    JointSignalModel::new(states.clone(), rows).unwrap()
}

pub fn additive_separable(rng: &mut ChaCha8Rng, finite: bool) -> FamilySpec {
    let m = rng.random_range(2..=4);
    let xs = random_states(rng, m, 0.0, 1.0);
    let pick = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.5) {
            CatalogFn::Quadratic {
                c: rng.random_range(-0.5..0.5),
            }
        } else {
            CatalogFn::Exp {
                eta: rng.random_range(0.5..3.0),
            }
        }
    };
    let spec = FamilySpec::new(FamilyKind::AdditiveSeparable, xs, (0.0, 1.0))
        .param("ku", rng.random_range(-1.0..1.0))
        .param("kv", rng.random_range(-1.0..1.0))
        .function("u", pick(rng))
        .function("v", pick(rng));
    if finite {
        let k = rng.random_range(2..6);
        spec.with_finite((0..k).map(|_| vec![rng.random_range(-1.0..2.0)]).collect())
    } else {
        spec.with_box(vec![(
            rng.random_range(-1.0..0.0),
            rng.random_range(0.5..2.0),
        )])
    }
}

pub fn cake_eating(rng: &mut ChaCha8Rng) -> FamilySpec {
    let m = rng.random_range(2..=4);
    let xs = random_states(rng, m, 1.0, 3.0);
    let w = if rng.random_bool(0.5) {
        CatalogFn::Exp {
            eta: rng.random_range(0.5..2.0),
        }
    } else {
        CatalogFn::Quadratic {
            c: rng.random_range(0.0..1.0),
        }
    };
    FamilySpec::new(FamilyKind::CakeEating, xs, (0.0, 1.0))
        .function(
            "u",
            CatalogFn::Quadratic {
                c: rng.random_range(0.0..1.0),
            },
        )
        .function(
            "v",
            CatalogFn::Exp {
                eta: rng.random_range(0.5..2.0),
            },
        )
        .function("w", w)
        .with_box(vec![(0.0, 1.0)])
}

pub fn risk_neutral(rng: &mut ChaCha8Rng) -> FamilySpec {
    let m = rng.random_range(2..=4);
    let xs = random_states(rng, m, -1.0, 1.0);
    let q11 = rng.random_range(0.5..2.0);
    let q22 = rng.random_range(0.5..2.0);
    let q12 = rng.random_range(-0.3..0.3);
    let row = |rng: &mut ChaCha8Rng| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let w = vec![row(rng)];
    // Half of the instances have `wa` proportional to `w`, which makes the
    // first-order system solvable.
    let wa = if rng.random_bool(0.5) {
        let s = rng.random_range(-0.5..0.5);
        vec![w[0].iter().map(|v| s * v).collect()]
    } else {
        vec![row(rng)]
    };
    FamilySpec::new(FamilyKind::RiskNeutral, xs, (0.0, 1.0))
        .function(
            "u",
            CatalogFn::Quadratic {
                c: rng.random_range(0.0..1.0),
            },
        )
        .with_matrices(RiskNeutralMatrices {
            q: vec![vec![q11, q12], vec![q12, q22]],
            h: row(rng),
            w,
            wa,
            noise: None,
        })
        .with_box(vec![(-2.0, 2.0), (-2.0, 2.0)])
}

/// Whether the optimal second decision stays strictly inside `B(a)` for every
/// posterior of every signal at every point of `grid`.
pub fn interior_everywhere(
    model: &DecisionModel,
    signals: &[&JointSignalModel],
    grid: &[f64],
    cfg: &precaution::SolverConfig,
) -> bool {
    grid.iter().all(|&a| {
        let FeasibleSet::Box(bounds) = model.feasible_at(a).unwrap() else {
            return true;
        };
        signals.iter().all(|sig| {
            sig.posteriors().iter().all(|(_, post)| {
                let sol = precaution::inner_solve(model, a, post, cfg).unwrap();
                sol.b.iter().zip(&bounds).all(|(b, (lo, hi))| {
                    let margin = 1e-3 * (hi - lo);
                    *b > lo + margin && *b < hi - margin
                })
            })
        })
    })
}
