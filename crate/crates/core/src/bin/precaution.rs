use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use precaution::experiments::{run, sweep, Analysis, ExperimentConfig};
use precaution::Error;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "precaution",
    version,
    about = "Batch analyses of two-stage decisions with learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "a-grid")]
    a_grid: Option<usize>,
    #[arg(long = "b-grid")]
    b_grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses listed in the config.
    Analyze(Common),
    /// Repeat the compare analysis for each value of one model parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path (`params.gamma`) or bare field name (`gamma`).
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// First-order and decomposition certificates.
    Certify(Common),
    /// Convex-function test of the two signals.
    Blackwell(Common),
}

/// Read the config, apply the command-line overrides, then validate.
fn load(c: &Common) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(&c.config).map_err(|io| Error::Config {
        pointer: String::new(),
        message: format!("cannot read {}: {io}", c.config.display()),
    })?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::Config {
        pointer: String::new(),
        message: e.to_string(),
    })?;
    if let Some(obj) = value.as_object_mut() {
        if let Some(seed) = c.seed {
            obj.insert("seed".into(), json!(seed));
        }
        for (key, n) in [("a_grid", c.a_grid), ("b_grid", c.b_grid)] {
            if let Some(n) = n {
                let solver = obj.entry("solver").or_insert_with(|| json!({}));
                if let Some(s) = solver.as_object_mut() {
                    s.insert(key.into(), json!(n));
                }
            }
        }
    }
    let dir = c.config.parent().map(PathBuf::from).unwrap_or_default();
    let mut cfg = ExperimentConfig::from_value(&value, dir)?;
    if let Some(o) = &c.out {
        cfg.output = Some(std::env::current_dir()?.join(o));
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } | Error::Json(_) => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn analyze(c: &Common, only: Option<Vec<Analysis>>) -> Result<bool, Error> {
    let mut cfg = load(c)?;
    if let Some(list) = only {
        cfg.analyses = list;
    }
    let bundle = run(&cfg)?;
    print!("{}", bundle.summary);
    if let Some(dir) = cfg.output.as_ref().map(|o| cfg.base_dir.join(o)) {
        for p in bundle.write(&dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(!bundle.has_errors())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(c) => analyze(c, None),
        Command::Certify(c) => analyze(c, Some(vec![Analysis::Foc, Analysis::Certify])),
        Command::Blackwell(c) => analyze(c, Some(vec![Analysis::Blackwell])),
        Command::Sweep {
            common,
            param,
            values,
        } => load(common).and_then(|cfg| {
            let report = sweep(&cfg, param, values)?;
            print!("{}", report.to_csv()?);
            if let Some(dir) = cfg.output.as_ref().map(|o| cfg.base_dir.join(o)) {
                report.write(&dir)?;
            }
            Ok(report.rows.iter().all(|r| r.error.is_none()))
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
