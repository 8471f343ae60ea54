//! Compare first-period consumption decisions with and without learning the
//! return on savings, then print the value table as CSV.

use precaution::{
    build_model, precautionary_compare, CatalogFn, Dist, FamilyKind, FamilySpec, JointSignalModel,
    SolverConfig,
};

fn main() -> precaution::Result<()> {
    let cfg = SolverConfig {
        a_grid: 41,
        ..SolverConfig::default()
    };
    for gamma in [0.5, 2.0, 5.0] {
        let spec = FamilySpec::new(
            FamilyKind::ConsumptionSavings,
            vec![0.6, 1.0, 1.4],
            (0.2, 1.8),
        )
        .param("w", 2.0)
        .param("beta", 0.95)
        .param("r", 1.5)
        .function("u1", CatalogFn::Log)
        .function("u2", CatalogFn::Crra { gamma })
        .function("u3", CatalogFn::Crra { gamma });
        let model = build_model(&spec)?;
        let full = JointSignalModel::full_info(&Dist::new(vec![0.3, 0.4, 0.3])?, model.states())?;
        let report = precautionary_compare(&model, &full, &full.no_info(), &cfg)?;
        println!(
            "gamma {gamma}: a* learning {:.4}, a* no learning {:.4}, value of information {}, ranking holds {}",
            report.a_star_finer.sup(),
            report.a_star_coarser.sup(),
            report.delta_scan.label(),
            report.ranking_holds
        );
        if gamma == 2.0 {
            print!("{}", report.to_csv()?);
        }
    }
    Ok(())
}
