//! Singular steady states: truncation continuation to the floored singular
//! forcing, the L^p size of the forcing, and the comparison with the barrier.
//!
//! cargo run --release --example singular_states -- 1024 0.005

use bcpatch::barrier::{comparison_check, reconstruct_k, solve_b0};
use bcpatch::reference::ReferencePatch;
use bcpatch::solver::{forcing_lp, solve_singular, SolverConfig, DEFAULT_LEVELS};
use bcpatch::{ForcingProfile, Grid};

fn main() -> bcpatch::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|a| a.parse().ok()).unwrap_or(1024);
    let eps = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.005);
    let s = 0.5;
    let r = ReferencePatch::build(Grid::new(n)?);
    let profile = ForcingProfile::singular(eps, s)?;
    let base = SolverConfig::new(profile).with_tol(1e-9);
    let sweep = solve_singular(profile, &DEFAULT_LEVELS, &base, &r)?;
    for rep in &sweep.reports {
        println!(
            "{:>32}: {:>3} iterations, C1 distance {:.4e}, |Lap phi| <= {:.2}",
            rep.profile.to_string(),
            rep.iterations,
            rep.c1_distance_to_psi0,
            rep.laplacian_sup
        );
    }
    let phi = sweep.last().expect("non-empty chain");
    let alpha = 2.0 * s / (s + 1.0);
    let p = 0.9 / alpha;
    println!("||F(phi)||_L^{p:.2} = {:.4}", forcing_lp(phi, p)?);

    let bs = reconstruct_k(s, solve_b0(s)?, 2001)?;
    let cmp = comparison_check(&phi.solution, &bs, eps);
    println!(
        "barrier comparison on r <= {:.4}: {} points, {} violations, worst margin {:.3e} (allowance {:.3e})",
        cmp.radius, cmp.points, cmp.violations, cmp.worst_margin, cmp.tol_disc
    );
    Ok(())
}
