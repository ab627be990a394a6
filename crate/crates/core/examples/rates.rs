//! Rate study through the configuration interface: a singular sweep and a
//! log-log fit of the C1 distance against eps^(s/2), written to `out/rates`.
//!
//! cargo run --release --example rates -- 512

use bcpatch::config::{Command, ExperimentConfig};
use bcpatch::reports::run_command;

fn main() -> bcpatch::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(512);
    let mut cfg = ExperimentConfig::new(Command::Rates);
    cfg.grid.n = n;
    cfg.profile.family = "singular".into();
    cfg.profile.eps = vec![0.08, 0.04, 0.02, 0.01];
    cfg.solver.tol = 1e-9;
    cfg.output.dir = "out/rates".into();
    println!("{}", cfg.to_toml()?);
    let out = run_command(&cfg)?;
    let fit = &out.summary["fit"];
    println!(
        "predictor {}: slope {:.4}, R^2 = {:.4}",
        fit["predictor"],
        fit["slope"].as_f64().unwrap_or(f64::NAN),
        fit["r2"].as_f64().unwrap_or(f64::NAN)
    );
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
