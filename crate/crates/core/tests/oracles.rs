//! Independent oracles for the core numerics.

use std::f64::consts::{FRAC_PI_4, PI};

use bcpatch::barrier::solve_b0;
use bcpatch::quadrature::GaussLegendre;
use bcpatch::reference::ReferencePatch;
use bcpatch::trajectory::{integrate_axis, trace_2d, Diagnostic, TailModel};
use bcpatch::{ForcingProfile, Grid, ScalarField, SpectralWorkspace};

const PSI0_CENTER: f64 = -0.018417838320378;

/// psi_0 as a double sine series of `sgn x sgn y`.
fn psi0_double_series(x: f64, y: f64, terms: usize) -> f64 {
    let mut acc = 0.0;
    for j in (1..terms).step_by(2) {
        let sx = (2.0 * PI * j as f64 * x).sin() / j as f64;
        for k in (1..terms).step_by(2) {
            let jk2 = (j * j + k * k) as f64;
            acc += sx * (2.0 * PI * k as f64 * y).sin() / (k as f64 * jk2);
        }
    }
    -16.0 / (PI * PI) * acc / (4.0 * PI * PI)
}

/// psi_0 as a single series in x with the exact hyperbolic profile in y.
fn psi0_sinh_series(x: f64, y: f64, terms: usize) -> f64 {
    let (sy, ay) = (y.signum(), y.abs());
    let mut acc = 0.0;
    for j in (1..terms).step_by(2) {
        let a = 2.0 * PI * j as f64;
        // g'' - a^2 g = 1 on (0, 1/2), g(0) = g(1/2) = 0
        let ratio = if a / 4.0 > 700.0 {
            (-a * (0.25 - (ay - 0.25).abs())).exp()
        } else {
            (a * (ay - 0.25)).cosh() / (a / 4.0).cosh()
        };
        let g = -(1.0 - ratio) / (a * a);
        acc += 4.0 / (PI * j as f64) * (a * x).sin() * g;
    }
    sy * acc
}

#[test]
fn series_oracles_agree() {
    let a = psi0_double_series(0.25, 0.25, 4001);
    let b = psi0_sinh_series(0.25, 0.25, 200_001);
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    assert!((b - PSI0_CENTER).abs() < 1e-11, "{b}");
    let (x, y) = (0.1, 0.37);
    assert!((psi0_double_series(x, y, 4001) - psi0_sinh_series(x, y, 200_001)).abs() < 1e-8);
}

#[test]
fn psi0_matches_series_at_sample_points() {
    let n = 1024;
    let r = ReferencePatch::build(Grid::new(n).unwrap());
    let g = r.grid();
    for (i, j) in [(3 * n / 4, 3 * n / 4), (n / 2 + 100, n / 2 + 377), (n / 2 + 7, n / 2 + 3), (200, 900)] {
        let (x, y) = (g.coord(i), g.coord(j));
        let oracle = psi0_sinh_series(x, y, 200_001);
        assert!((r.psi0.at(i, j) - oracle).abs() < 1e-6, "({x}, {y}): {} vs {oracle}", r.psi0.at(i, j));
    }
}

#[test]
fn mollified_forcing_is_a_convolution() {
    let eps = 0.02;
    let p = ForcingProfile::mollified(eps).unwrap();
    let rule = GaussLegendre::new(20);
    for k in 0..=60 {
        let x = -1.5 * eps + 3.0 * eps * k as f64 / 60.0;
        // -(sgn * K_eps)(x) = -int sgn(x - t) K(t / eps) / eps dt, split at t = x
        let kern = |t: f64| bcpatch::forcing::mollifier(t / eps) / eps;
        let lo = (-eps).min(x).max(-eps);
        let hi = x.clamp(-eps, eps);
        let below = rule.integrate(kern, lo, hi);
        let above = rule.integrate(kern, hi, eps);
        let oracle = -(below - above);
        assert!((p.eval(x).unwrap() - oracle).abs() < 1e-13, "x = {x}");
    }
}

/// Tanh-sinh rule on `[0, 1]` for the original shooting integral in `k`.
fn tanh_sinh(f: impl Fn(f64, f64) -> f64) -> f64 {
    // f(x, 1 - x) lets the integrand use the distance to 1 without cancellation
    let h = 1.0 / 64.0;
    let mut acc = 0.0;
    for m in -400..=400 {
        let t = m as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        let x = 0.5 * (1.0 + u.tanh());
        let one_minus = 1.0 / (1.0 + (2.0 * u).exp());
        if one_minus <= 0.0 || x <= 0.0 {
            continue;
        }
        acc += 0.5 * w * f(x, one_minus);
    }
    acc * h
}

fn shooting_oracle(s: f64, b: f64) -> f64 {
    let a = 4.0 / ((1.0 + s) * (1.0 + s));
    let bb = 2.0 * b.powf(-1.0 - s) / (1.0 - s);
    tanh_sinh(|k, d| {
        // 1 - k^2 = d (1 + k), 1 - k^{1-s} = -expm1((1-s) ln1p(-d))
        let v = a * d * (1.0 + k) - bb * ((1.0 - s) * (-d).ln_1p()).exp_m1();
        1.0 / v.sqrt()
    })
}

#[test]
fn b0_matches_tanh_sinh_root() {
    for (s, frozen) in [(0.3, 0.8730989695), (0.5, 0.7485635953304363), (0.8, 0.7260214377)] {
        let (mut lo, mut hi) = (0.1f64, 10.0f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            // I increases with B
            if shooting_oracle(s, mid) < FRAC_PI_4 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let b0 = solve_b0(s).unwrap();
        assert!((b0 - lo).abs() < 1e-9 * lo, "s = {s}: {b0} vs {lo}");
        assert!((b0 - frozen).abs() < 1e-9, "s = {s}: {b0}");
    }
}

#[test]
fn power_law_arrival_closed_form() {
    for (c, s, y0) in [(0.7, 0.5, 0.1), (1.3, 0.3, 0.2), (0.4, 0.8, 0.05)] {
        let law = TailModel::PowerLaw { c, p: 1.0 - s };
        let rec = integrate_axis(&law, y0, 20.0, 1e-10).unwrap();
        let exact = y0.powf(s) / (c * s);
        assert_eq!(rec.diagnostic, Diagnostic::FiniteArrival);
        assert!((rec.arrival_time.unwrap() - exact).abs() <= 1e-9 * exact);
    }
}

#[test]
fn log_linear_flow_is_double_exponential() {
    let (c, y0) = (0.6, 0.1);
    let law = TailModel::LogLinear { c };
    let rec = integrate_axis(&law, y0, 8.0, 1e-10).unwrap();
    for (t, z) in rec.times.iter().zip(&rec.log_positions) {
        let exact = y0.ln() * (c * t).exp();
        assert!((z - exact).abs() <= 1e-8 * exact.abs(), "t = {t}");
    }
}

/// Period of the `sin(2 pi x) sin(2 pi y)` orbit through `(1/4, y0)`.
fn cell_period(y0: f64) -> f64 {
    let e = (2.0 * PI * y0).sin();
    let x_min = e.asin() / (2.0 * PI);
    let span = (0.25 - x_min).sqrt();
    let rule = GaussLegendre::new(40);
    // x = x_min + w^2 removes the inverse square root at the turning point
    let f = |w: f64| {
        let x = x_min + w * w;
        let u = (2.0 * PI * x).sin();
        let c = (1.0 - (e / u).powi(2)).max(0.0).sqrt();
        2.0 * w / (2.0 * PI * u * c)
    };
    let panels = 64;
    let total: f64 = (0..panels)
        .map(|k| rule.integrate(f, span * k as f64 / panels as f64, span * (k + 1) as f64 / panels as f64))
        .sum();
    4.0 * total
}

#[test]
fn cell_orbit_closes_after_quadrature_period() {
    let g = Grid::new(128).unwrap();
    let psi = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
    let y0 = 0.1;
    let t = cell_period(y0);
    let path = trace_2d(&psi, (0.25, y0), t, 1e-11).unwrap();
    let &(x, y) = path.points.last().unwrap();
    assert!((x - 0.25).hypot(y - y0) < 1e-6, "end ({x}, {y}) after T = {t}");
    // the interpolant is only C1 across cell edges, which caps the step order there
    assert!(path.max_psi_drift < 1e-7, "drift {}", path.max_psi_drift);
}

#[test]
fn inverse_laplacian_of_separable_mode() {
    let g = Grid::new(64).unwrap();
    let f = ScalarField::from_fn(g, |x, y| (2.0 * PI * 3.0 * x).sin() * (2.0 * PI * 5.0 * y).cos());
    let mut ws = SpectralWorkspace::new(g);
    let u = ws.inv_laplacian(&f);
    let k2 = 4.0 * PI * PI * 34.0;
    let d = u.add(&f.scaled(1.0 / k2)).unwrap();
    assert!(d.norm_c0() < 1e-15);
}
