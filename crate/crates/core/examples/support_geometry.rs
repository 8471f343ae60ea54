//! Support functions of finite payoff sets: Minkowski additivity, the
//! star-difference and the sampled convexity probe.

use precaution::geometry::support_identity_check;
use precaution::{
    convexity_probe, decomposition_certificate, minkowski_sum, star_difference, Dist, PayoffSet,
};

fn main() -> precaution::Result<()> {
    let l1 = PayoffSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let l2 = PayoffSet::new(vec![vec![0.5, 0.5], vec![2.0, -1.0]])?;
    let sum = minkowski_sum(&l1, &l2)?;
    println!("L1 + L2 = {:?}", sum.vectors());

    let gaps = support_identity_check(
        2,
        |r| sum.support_value(r).unwrap(),
        |r| l1.support_value(r).unwrap(),
        |r| l2.support_value(r).unwrap(),
        500,
        7,
    );
    println!(
        "sigma(L1 + L2) - sigma(L1) - sigma(L2): max {:.2e} over {} beliefs",
        gaps.max_gap, gaps.probes
    );

    // Recover a summand from the sum.
    let k = star_difference(&sum, &l1)?.expect("finite sets have a nonempty star-difference");
    println!("star-difference (L1 + L2) - L1 = {:?}", k.vectors());
    let cert = decomposition_certificate(&sum, &l1, 500, 7)?;
    println!(
        "decomposition certificate passed={} max gap {:.2e}",
        cert.passed, cert.max_gap
    );

    // A difference of support functions that is neither convex nor concave.
    let a = PayoffSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let b = PayoffSet::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]])?;
    let f = |r: &Dist| a.support_value(r).unwrap() - b.support_value(r).unwrap();
    let verdict = convexity_probe(f, 2, 1000, 3);
    println!("sigma_A - sigma_B is {:?}", verdict.kind);
    if let Some(w) = &verdict.against_convex {
        println!(
            "  midpoint defect {:.4} between {:?} and {:?}",
            w.defect, w.rho1, w.rho2
        );
    }
    let verdict = convexity_probe(|r| a.support_value(r).unwrap(), 2, 1000, 3);
    println!("sigma_A alone is {:?}", verdict.kind);
    Ok(())
}
