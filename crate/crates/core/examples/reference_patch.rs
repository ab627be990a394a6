//! Builds psi_0, prints its property report and the level-set law.
//!
//! cargo run --release --example reference_patch -- 2048

use bcpatch::reference::{level_set_area, ReferencePatch};
use bcpatch::Grid;

fn main() -> bcpatch::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1024);
    let r = ReferencePatch::build(Grid::new(n)?);
    println!("n = {n}, psi_0(1/4, 1/4) = {:.12}", r.psi0.at(3 * n / 4, 3 * n / 4));
    let p = if Grid::new(n)?.h() < bcpatch::reference::STRIP {
        r.verify_properties()
    } else {
        r.verify_properties_coarse()
    };
    println!("negative in the open quadrant: {} ({} points)", p.negativity.pass, p.negativity.points);
    println!(
        "psi_0 / (x y ln x) in [{:.4}, {:.4}] for x < {:.4} ({} samples)",
        p.log_ratio.c_lo, p.log_ratio.c_hi, p.log_ratio.window, p.log_ratio.samples
    );
    println!("psi_0 < -x y / {:.2} on the strip", p.corner.c4);
    println!("epsilon_1 = {:.3e}, key lemma violations = {}", p.epsilon1, p.key_lemma.violations);
    for a in [1e-2, 1e-3, 1e-4] {
        let area = level_set_area(&r.psi0, a);
        println!("A = {a:.0e}: area = {area:.4e}, area / (-A ln A) = {:.3}", area / (-a * f64::ln(a)));
    }
    Ok(())
}
