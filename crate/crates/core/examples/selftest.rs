//! Runs the structural self-checks and prints one line per item.
//!
//! cargo run --release --example selftest -- 256

use bcpatch::selftest::run_selftest;
use bcpatch::Grid;

fn main() -> bcpatch::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(256);
    let rep = run_selftest(Grid::new(n)?, 0);
    for item in &rep.items {
        println!("[{}] {}", if item.pass { "PASS" } else { "FAIL" }, item.name);
    }
    std::process::exit(if rep.pass { 0 } else { 1 });
}
