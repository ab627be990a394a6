//! The polar barrier profile K(theta): amplitude, invariants and the ODE
//! cross-check, for a few exponents.
//!
//! cargo run --release --example barrier

use std::f64::consts::FRAC_PI_4;

use bcpatch::barrier::{b0_roots, reconstruct_k, shooting_integral};

fn main() -> bcpatch::Result<()> {
    for s in [0.3, 0.5, 0.8] {
        let roots = b0_roots(s)?;
        let b0 = roots[0];
        let k = reconstruct_k(s, b0, 2001)?;
        let inv = k.invariants();
        let ode = k.ode_cross_check()?;
        let i_inf = shooting_integral(s, 1e6)?;
        println!("s = {s}");
        println!(
            "  B0 = {b0:.12} ({} root(s)), K'(0) = {:.8}, C(s) = {:.6}",
            roots.len(),
            k.kprime0,
            k.radius_factor()
        );
        println!("  K / sin(2 theta) in [{:.6}, {:.6}]", inv.sin_ratio.0, inv.sin_ratio.1);
        println!(
            "  first-integral drift {:.2e}, max |K_ode - K| {:.2e}",
            ode.first_integral_drift, ode.max_k_difference
        );
        println!("  I(1e6) - (1+s) pi/4 = {:.2e}", i_inf - (1.0 + s) * FRAC_PI_4);
    }
    Ok(())
}
