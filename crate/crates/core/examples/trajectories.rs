//! Particles on the invariant axis: double-exponential approach under psi_0,
//! finite-time arrival under a singular state, and a closed 2D orbit.
//!
//! cargo run --release --example trajectories -- 1024

use bcpatch::reference::ReferencePatch;
use bcpatch::solver::{solve_singular, SolverConfig, DEFAULT_LEVELS};
use bcpatch::trajectory::{axis_profile, integrate_axis, trace_2d};
use bcpatch::{ForcingProfile, Grid};

fn main() -> bcpatch::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1024);
    let grid = Grid::new(n)?;
    let r = ReferencePatch::build(grid);
    let y_min = 4.0 * grid.h();

    let prof = axis_profile(&r.psi0, y_min, 0.45, 400)?;
    let rec = integrate_axis(&prof, 0.1, 10.0, 1e-8)?;
    println!("psi_0 tail {:?}: {:?}", prof.tail, rec.diagnostic);
    if let Some(f) = rec.double_exp_fit {
        println!("  ln(-ln y) ~ {:.4} t + {:.4}, R^2 = {:.5}", f.slope, f.intercept, f.r2);
    }

    let profile = ForcingProfile::singular(0.02, 0.5)?;
    let sw = solve_singular(profile, &DEFAULT_LEVELS, &SolverConfig::new(profile).with_tol(1e-9), &r)?;
    let phi = &sw.last().expect("non-empty chain").solution;
    let prof = axis_profile(phi, y_min, 0.45, 400)?;
    println!("singular state: u^2 ~ -{:.3} y^{:.3} on the fit decade", prof.fitted_constant, prof.fitted_exponent);
    for y0 in [0.05, 0.1, 0.2] {
        let rec = integrate_axis(&prof, y0, 10.0, 1e-8)?;
        match rec.arrival_time {
            Some(t) => println!("  y0 = {y0}: arrival at t = {t:.4}, t / y0^s = {:.4}", t / y0.sqrt()),
            None => println!("  y0 = {y0}: {:?}", rec.diagnostic),
        }
    }

    let path = trace_2d(&r.psi0, (0.25, 0.1), 5.0, 1e-9)?;
    println!("2D path from (0.25, 0.1): length {:.4}, psi drift {:.2e}", path.length, path.max_psi_drift);
    Ok(())
}
