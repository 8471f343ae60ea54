//! First-order certificates across the model zoo, the scaling identity of the
//! global-warming utility, and the full certificate chain on one instance.

use precaution::zoo::{chain_check, ChainOptions};
use precaution::{foc_certificate, gjt_identity_check, CatalogFn, FamilyKind, FamilySpec};

fn show(name: &str, spec: &FamilySpec, a1: f64, a0: f64, b1: &[f64]) {
    match foc_certificate(spec, a1, a0, b1, &spec.states) {
        Ok(c) => println!(
            "{name}: M = {:?}, b0 = {:?}, residual {:.1e}, passed {}, reverse {}",
            c.m, c.b0, c.residual, c.passed, c.reverse_passed
        ),
        Err(e) => println!("{name}: {e}"),
    }
}

fn consumption_savings(gamma: f64) -> FamilySpec {
    FamilySpec::new(
        FamilyKind::ConsumptionSavings,
        vec![0.6, 1.0, 1.4],
        (0.2, 1.0),
    )
    .param("w", 2.0)
    .param("beta", 0.95)
    .param("r", 1.5)
    .function("u1", CatalogFn::Log)
    .function("u2", CatalogFn::Crra { gamma })
    .function("u3", CatalogFn::Crra { gamma })
}

fn main() -> precaution::Result<()> {
    let additive = FamilySpec::new(
        FamilyKind::AdditiveSeparable,
        vec![0.0, 0.5, 1.0],
        (0.0, 1.0),
    )
    .function("u", CatalogFn::Quadratic { c: 0.3 })
    .function("v", CatalogFn::Quadratic { c: 0.0 })
    .with_box(vec![(0.0, 1.0)]);
    show("additive separable", &additive, 0.8, 0.2, &[0.4]);
    show(
        "consumption-savings, gamma 0.5",
        &consumption_savings(0.5),
        0.9,
        0.3,
        &[0.6],
    );
    show(
        "consumption-savings, gamma 2",
        &consumption_savings(2.0),
        0.9,
        0.3,
        &[0.6],
    );

    let warming = FamilySpec::new(FamilyKind::GlobalWarming, vec![0.5, 1.5], (0.1, 1.0))
        .param("gamma", 0.5)
        .param("eta", 12.0)
        .function("u", CatalogFn::Quadratic { c: 1.0 })
        .with_box(vec![(0.0, 8.0)]);
    show("global warming, interior b1", &warming, 0.8, 0.3, &[4.0]);
    show(
        "global warming, b1 at the box edge",
        &warming,
        0.8,
        0.3,
        &[8.0],
    );

    let grid: Vec<f64> = (0..100).map(|i| 0.1 + 9.9 * i as f64 / 99.0).collect();
    println!(
        "scaling identity residual, gamma 2, eta 1, alpha 2: {:.1e}",
        gjt_identity_check(2.0, 1.0, 2.0, &grid)?
    );

    let opts = ChainOptions {
        samples: 100,
        trials: 300,
        seed: 9,
        ..ChainOptions::default()
    };
    for gamma in [0.5, 2.0] {
        let r = chain_check(&consumption_savings(gamma), 0.9, 0.3, &opts)?;
        println!(
            "chain, gamma {gamma}: orientation {:?}, identity gap {:.1e}, difference {:?}, violation {}",
            r.orientation,
            r.decomposition.as_ref().map_or(f64::NAN, |d| d.max_gap),
            r.convexity.as_ref().map(|c| c.kind),
            r.violation
        );
    }
    Ok(())
}
