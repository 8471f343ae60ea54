//! Literature model families with closed-form marginal structure, and the
//! first-order certificates specialized to each of them.

mod catalog;
mod chain;
mod families;
mod foc;

pub use catalog::{CatalogFn, DOMAIN_MARGIN};
pub use chain::{chain_check, ChainOptions, ChainReport, Orientation, ProbeOutcome};
pub use families::{build_model, FamilyKind, FamilySpec, RiskNeutralMatrices, ZooModel};
pub use foc::{
    foc_certificate, foc_certificate_for, gjt_identity_check, gjt_identity_residual,
    FocCertificate, BOUNDARY_TOL, CURVATURE_TOL, FOC_TOL,
};
