//! Sweep the curvature of both period-two utilities in the consumption-savings
//! demo. The value 1 is outside the CRRA catalog and shows up as a row error.

use std::path::PathBuf;

use precaution::experiments::{sweep, ExperimentConfig};

fn main() -> precaution::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/consumption_savings.json");
    let cfg = ExperimentConfig::load(&path)?;
    let report = sweep(&cfg, "gamma", &[0.5, 1.0, 2.0, 5.0])?;
    println!("swept {}", report.targets.join(", "));
    print!("{}", report.to_csv()?);
    Ok(())
}
