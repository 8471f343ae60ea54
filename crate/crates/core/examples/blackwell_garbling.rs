//! Posteriors of a noisy signal, a garbling of it, and the sampled
//! convex-function test showing the original is more informative.

use precaution::prob::information_gap;
use precaution::{blackwell_sample_test, Garbling, JointSignalModel, MaxAffine, StateSpace};

fn main() -> precaution::Result<()> {
    let states = StateSpace::new(vec![0.0, 1.0, 2.0])?;
    // Three signal values, each pointing at one state with probability 0.7.
    let joint = vec![
        vec![0.7 / 3.0, 0.15 / 3.0, 0.15 / 3.0],
        vec![0.15 / 3.0, 0.7 / 3.0, 0.15 / 3.0],
        vec![0.15 / 3.0, 0.15 / 3.0, 0.7 / 3.0],
    ];
    let finer = JointSignalModel::new(states, joint)?;
    let coarser = finer.garble(&Garbling::from_map(vec![0, 1, 1])?)?;

    println!("finer signal");
    for (p, post) in finer.posteriors() {
        println!("  P(y) = {p:.4}  posterior {:?}", post.probs());
    }
    println!("garbled signal (values 1 and 2 merged)");
    for (p, post) in coarser.posteriors() {
        println!("  P(y) = {p:.4}  posterior {:?}", post.probs());
    }

    // One convex function by hand: the support function of a decision problem
    // with three actions.
    let phi = MaxAffine::support(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ]);
    println!(
        "gap for a three-action guess: {:.6}",
        information_gap(&finer, &coarser, &phi)
    );

    let forward = blackwell_sample_test(&finer, &coarser, 2000, 4, 42)?;
    let backward = blackwell_sample_test(&coarser, &finer, 2000, 4, 42)?;
    println!(
        "finer vs garbled: passed={} min gap {:.3e}",
        forward.passed, forward.min_gap
    );
    println!(
        "garbled vs finer: passed={} min gap {:.3e}",
        backward.passed, backward.min_gap
    );
    Ok(())
}
