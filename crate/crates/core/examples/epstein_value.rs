//! Build a two-stage model by hand and evaluate the Epstein functional, the
//! value of a signal and the value of information along the first decision.

use precaution::{
    delta_value, epstein_j, inner_solve, payoff_set, signal_value, DecisionModel, Dist,
    FeasibleSet, JointSignalModel, SolverConfig, StateSpace,
};

fn main() -> precaution::Result<()> {
    let states = StateSpace::new(vec![0.0, 1.0])?;
    // Investment `a` now, a second purchase `b <= a` later; the state is demand.
    let model = DecisionModel::new(
        states.clone(),
        (0.0, 1.0),
        1,
        |a, b, x| -0.4 * a - 0.3 * b[0] + (a + b[0]).min(2.0 * x),
        |a| FeasibleSet::interval(0.0, a),
    )?;
    let cfg = SolverConfig::default();

    let rho = Dist::new(vec![0.5, 0.5])?;
    for a in [0.25, 0.5, 1.0] {
        let sol = inner_solve(&model, a, &rho, &cfg)?;
        println!(
            "a = {a}: J = {:.4} at b = {:.4}",
            epstein_j(&model, a, &rho, &cfg)?,
            sol.b[0]
        );
    }

    let finite = DecisionModel::with_fixed_set(
        states.clone(),
        (0.0, 1.0),
        FeasibleSet::points(&[0.0, 0.5, 1.0]),
        |a, b, x| -(a - 0.5).powi(2) - (b[0] - x).powi(2),
    )?;
    println!(
        "payoff set at a = 0.5: {:?}",
        payoff_set(&finite, 0.5, &cfg)?.vectors()
    );

    let full = JointSignalModel::full_info(&Dist::new(vec![0.5, 0.5])?, &states)?;
    let none = full.no_info();
    for a in [0.25, 0.5, 1.0] {
        println!(
            "a = {a}: V full {:.4}  V none {:.4}  gain {:.4}",
            signal_value(&model, a, &full, &cfg)?,
            signal_value(&model, a, &none, &cfg)?,
            delta_value(&model, a, &full, &none, &cfg)?
        );
    }
    Ok(())
}
