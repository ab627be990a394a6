//! Smooth steady states for the mollified sign forcing: a continuation sweep,
//! the linearized gap, and a multi-start uniqueness check.
//!
//! cargo run --release --example smooth_states -- 512

use bcpatch::reference::ReferencePatch;
use bcpatch::solver::{continuation_sweep, linearized_gap, perturbed_reference, uniqueness_check, SolverConfig};
use bcpatch::{ForcingProfile, Grid};

fn main() -> bcpatch::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(512);
    let r = ReferencePatch::build(Grid::new(n)?);
    let steps: Vec<ForcingProfile> =
        [0.02, 0.015, 0.01, 0.0075].iter().map(|&e| ForcingProfile::mollified(e)).collect::<Result<_, _>>()?;
    let base = SolverConfig::new(steps[0]).with_tol(1e-9);
    let sweep = continuation_sweep(&steps, &base, &r)?;
    println!("{:>22} {:>5} {:>11} {:>10} {:>9} {:>7}", "profile", "iter", "residual", "C1 dist", "ratio", "mu");
    for rep in &sweep.reports {
        let s = rep.summary();
        let mu = linearized_gap(&rep.solution, &rep.profile)?.mu;
        println!(
            "{:>22} {:>5} {:>11.3e} {:>10.4e} {:>9.4} {:>7.4}",
            s.profile, s.iterations, s.final_residual, s.c1_distance_to_psi0, s.ball_ratio, mu
        );
    }

    let eps = 0.01;
    let cfg = SolverConfig::new(ForcingProfile::mollified(eps)?).with_tol(1e-9);
    let amp = 0.3 * bcpatch::solver::ball_radius(eps);
    let guesses = vec![r.psi0.clone(), r.psi0.scaled(0.999), perturbed_reference(&r, amp, 1)];
    let u = uniqueness_check(&cfg, &guesses, &r)?;
    println!("eps = {eps}: largest C1 distance between limits = {:.3e}", u.max_distance);
    Ok(())
}
