//! Steady states in the regimes where the qualitative claims are checkable on
//! a moderate grid.

use bcpatch::barrier::{comparison_check, reconstruct_k, solve_b0};
use bcpatch::reference::ReferencePatch;
use bcpatch::solver::{
    continuation_sweep, perturbed_reference, solve, solve_singular, uniqueness_check, SolverConfig, DEFAULT_LEVELS,
};
use bcpatch::{ForcingProfile, Grid};

#[test]
fn singular_state_lies_below_the_barrier() {
    let (s, eps) = (0.5, 0.005);
    let r = ReferencePatch::build(Grid::new(1024).unwrap());
    let profile = ForcingProfile::singular(eps, s).unwrap();
    let sweep = solve_singular(profile, &DEFAULT_LEVELS, &SolverConfig::new(profile).with_tol(1e-9), &r).unwrap();
    assert!(sweep.complete());
    let phi = sweep.last().unwrap();
    let bs = reconstruct_k(s, solve_b0(s).unwrap(), 2001).unwrap();
    let cmp = comparison_check(&phi.solution, &bs, eps);
    assert!(cmp.points > 100, "{cmp:?}");
    assert!(cmp.arc_margin >= -cmp.tol_disc, "{cmp:?}");
    assert_eq!(cmp.violations, 0, "{cmp:?}");
}

#[test]
fn mollified_state_is_unique_near_psi0() {
    let eps = 0.01;
    let r = ReferencePatch::build(Grid::new(512).unwrap());
    let cfg = SolverConfig::new(ForcingProfile::mollified(eps).unwrap()).with_tol(1e-9);
    let amp = 0.3 * (eps * -eps.ln()).sqrt();
    let guesses = [r.psi0.clone(), r.psi0.scaled(0.999), perturbed_reference(&r, amp, 11)];
    let u = uniqueness_check(&cfg, &guesses, &r).unwrap();
    assert!(u.max_distance <= 10.0 * 1e-9, "{u:?}");
    let rep = solve(&cfg, &r).unwrap();
    assert!(rep.converged);
    assert!(rep.laplacian_sup <= 1.0 + 1e-9);
    assert!(rep.c1_distance_to_psi0 < (eps * -eps.ln()).sqrt());
}

#[test]
fn mollified_sweep_recovers_after_the_trivial_regime() {
    let r = ReferencePatch::build(Grid::new(256).unwrap());
    let profiles: Vec<_> = [0.08, 0.01].iter().map(|&e| ForcingProfile::mollified(e).unwrap()).collect();
    let sweep = continuation_sweep(&profiles, &SolverConfig::new(profiles[0]).with_tol(1e-9), &r).unwrap();
    assert!(sweep.complete());
    assert!(sweep.reports[0].solution.norm_c0() < 1e-8);
    assert!(sweep.reports[1].solution.norm_c0() > 0.5 * r.psi0.norm_c0());
}
