//! Load a JSON experiment, run it, and write the report bundle.
//!
//! ```text
//! cargo run --example experiment_bundle -- crates/core/configs/global_warming.json /tmp/gw
//! ```

use std::path::PathBuf;

use precaution::experiments::{run, ExperimentConfig};

fn main() -> precaution::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/consumption_savings.json")
    });
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("precaution-bundle"));

    let cfg = ExperimentConfig::load(&config)?;
    let bundle = run(&cfg)?;
    print!("{}", bundle.summary);
    for path in bundle.write(&out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
