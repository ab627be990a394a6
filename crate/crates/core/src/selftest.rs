//! Structural self-checks of every module, run in a fixed order.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::barrier::{reconstruct_k, solve_b0};
use crate::forcing::ForcingProfile;
use crate::grid::{Grid, ScalarField};
use crate::quadrature::GaussLegendre;
use crate::reference::ReferencePatch;
use crate::spectral::SpectralWorkspace;

#[derive(Debug, Clone, Serialize)]
pub struct SelftestItem {
    pub name: &'static str,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub n: usize,
    pub items: Vec<SelftestItem>,
    pub pass: bool,
}

pub fn run_selftest(grid: Grid, seed: u64) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ws = SpectralWorkspace::new(grid);
    let items = vec![
        spectral_round_trip(&mut ws, &mut rng),
        symmetry_idempotence(grid, &mut rng),
        forcing_properties(),
        reference_properties(&mut ws),
        steiner_bound(&mut ws, &mut rng),
        stripe_potential(0.5),
        barrier_conservation(0.5),
    ];
    let pass = items.iter().all(|i| i.pass);
    SelftestReport { n: grid.n(), items, pass }
}

fn noise(grid: Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField::from_values(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite noise")
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn spectral_round_trip(ws: &mut SpectralWorkspace, rng: &mut ChaCha8Rng) -> SelftestItem {
    let grid = ws.grid();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let w = ws.low_pass(&noise(grid, rng), (grid.n() / 4) as f64);
        let inv = ws.inv_laplacian(&w);
        let back = ws.laplacian(&inv);
        let d = back.sub(&w).expect("same grid");
        worst = worst.max(l2(d.values()) / l2(w.values()));
    }
    SelftestItem { name: "spectral_round_trip", pass: worst <= 1e-10, detail: json!({ "max_relative_l2": worst }) }
}

fn symmetry_idempotence(grid: Grid, rng: &mut ChaCha8Rng) -> SelftestItem {
    let p = noise(grid, rng).project_symmetry();
    let pp = p.project_symmetry();
    let change = pp.sub(&p).expect("same grid").norm_c0();
    let defect = p.symmetry_defect();
    SelftestItem {
        name: "symmetry_idempotence",
        pass: change <= 1e-15 && defect <= 1e-15,
        detail: json!({ "reprojection_change": change, "defect": defect }),
    }
}

fn forcing_properties() -> SelftestItem {
    let eps = 0.05;
    let profiles = [
        ForcingProfile::mollified(eps).unwrap(),
        ForcingProfile::singular(eps, 0.5).unwrap(),
        ForcingProfile::truncated(eps, 0.5, 8).unwrap(),
    ];
    let xs: Vec<f64> = (1..=10_000).map(|k| 0.5 * k as f64 / 10_000.0).collect();
    let mut failures = Vec::new();
    for p in &profiles {
        let vals: Vec<f64> = xs.iter().map(|&x| p.eval(x).unwrap()).collect();
        let odd = xs.iter().zip(&vals).all(|(&x, &v)| p.eval(-x).unwrap() == -v);
        let plateau = xs.iter().zip(&vals).all(|(&x, &v)| x < 2.0 * eps || v == -1.0);
        let below = vals.iter().all(|&v| v <= -1.0 + 1e-15 || matches!(p, ForcingProfile::MollifiedSign { .. }));
        let monotone = match p {
            ForcingProfile::MollifiedSign { .. } => vals.windows(2).all(|w| w[1] <= w[0]),
            _ => vals.windows(2).all(|w| w[1] >= w[0]),
        };
        let bounded = p.bound().is_none_or(|b| vals.iter().all(|v| v.abs() <= b));
        if !(odd && plateau && below && monotone && bounded) {
            failures.push(json!({
                "profile": p.to_string(),
                "odd": odd,
                "plateau": plateau,
                "below_minus_one": below,
                "monotone": monotone,
                "bounded": bounded,
            }));
        }
    }
    SelftestItem {
        name: "forcing_properties",
        pass: failures.is_empty(),
        detail: json!({ "profiles": profiles.iter().map(|p| p.to_string()).collect::<Vec<_>>(), "failures": failures }),
    }
}

fn reference_properties(ws: &mut SpectralWorkspace) -> SelftestItem {
    let r = ReferencePatch::build_with(ws);
    let rep = r.verify_properties_coarse();
    SelftestItem {
        name: "reference_properties",
        pass: rep.pass,
        detail: serde_json::to_value(&rep).expect("serializable"),
    }
}

/// Bound checked for the fitted Steiner constant; the planar value is `1/sqrt(pi)`.
pub const STEINER_LIMIT: f64 = 0.6;

fn steiner_bound(ws: &mut SpectralWorkspace, rng: &mut ChaCha8Rng) -> SelftestItem {
    let grid = ws.grid();
    let mut samples = Vec::new();
    let mut c_fit: f64 = 0.0;
    for _ in 0..12 {
        let area = 10f64.powf(rng.gen_range(-3.0..-1.7));
        let aspect = 4f64.powf(rng.gen_range(-1.0..1.0));
        let (a, b) = ((area * aspect).sqrt(), (area / aspect).sqrt());
        let (x0, y0) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let inside = |t: f64, t0: f64, len: f64| (t - t0).rem_euclid(1.0) < len;
        let chi = ScalarField::from_fn(grid, |x, y| if inside(x, x0, a) && inside(y, y0, b) { 1.0 } else { 0.0 });
        let measure = chi.values().iter().sum::<f64>() * grid.h() * grid.h();
        if measure == 0.0 {
            continue;
        }
        let psi = ws.inv_laplacian(&chi);
        let g = ws.max_gradient_slice(psi.values());
        // the kernel 1/|.| is 2 pi |grad Green|
        let c = 2.0 * PI * g / (measure.sqrt() + measure);
        c_fit = c_fit.max(c);
        samples.push(json!({ "area": measure, "grad_max": g, "ratio": c }));
    }
    SelftestItem {
        name: "steiner_bound",
        pass: !samples.is_empty() && c_fit <= 2.0 * PI * STEINER_LIMIT,
        detail: json!({ "fitted_c": c_fit, "limit": 2.0 * PI * STEINER_LIMIT, "samples": samples }),
    }
}

/// `int_{B_R} f(y1) / |P - Q| dQ` in polar coordinates about `P`, for
/// `f(y) = |y|^{-alpha}` (`alpha = 0` gives `f = 1`). The radial integral is
/// exact; the angular one uses composite Gauss–Legendre.
pub fn stripe_potential_at(px: f64, py: f64, r: f64, alpha: f64) -> f64 {
    let rule = GaussLegendre::new(8);
    let anti = |w: f64| w.signum() * w.abs().powf(1.0 - alpha) / (1.0 - alpha);
    let panels = 512;
    let dphi = 2.0 * PI / panels as f64;
    let radial = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let pd = px * c + py * s;
        let rho = -pd + (pd * pd - px * px - py * py + r * r).max(0.0).sqrt();
        if alpha == 0.0 {
            rho
        } else if s.abs() < 1e-14 {
            rho * py.abs().powf(-alpha)
        } else {
            (anti(py + s * rho) - anti(py)) / s
        }
    };
    (0..panels).map(|k| rule.integrate(radial, k as f64 * dphi, (k + 1) as f64 * dphi)).sum()
}

fn stripe_potential(s: f64) -> SelftestItem {
    let alpha = 2.0 * s / (s + 1.0);
    let p = 0.5 * (1.0 + 1.0 / alpha);
    // [int_{-1}^{1} |f(R y)|^p dy]^{1/p} for f = |y|^{-alpha}
    let norm = |r: f64, a: f64| r.powf(-a) * (2.0 / (1.0 - a * p)).powf(1.0 / p);
    let ratio = |r: f64, a: f64| {
        let mut worst: f64 = 0.0;
        for i in -3..=3 {
            for j in -3..3 {
                let (x, y) = (0.25 * i as f64 * r, 0.25 * (j as f64 + 0.5) * r);
                worst = worst.max(stripe_potential_at(x, y, r, a) / (r * norm(r, a)));
            }
        }
        worst
    };
    let c_fit = ratio(1.0, alpha);
    let scaled: Vec<(f64, f64)> = [0.25, 0.5, 1.5].iter().map(|&r| (r, ratio(r, alpha))).collect();
    let consistent = scaled.iter().all(|&(_, c)| c <= c_fit * (1.0 + 1e-9));
    let center = stripe_potential_at(0.0, 0.0, 1.0, 0.0);
    let center_err = (center - 2.0 * PI).abs();
    let c_one = ratio(1.0, 0.0);
    SelftestItem {
        name: "stripe_potential",
        pass: c_fit.is_finite() && consistent && center_err <= 1e-10 && c_one <= 2.0 * PI / 2f64.powf(1.0 / p) + 1e-9,
        detail: json!({
            "alpha": alpha,
            "p": p,
            "fitted_c": c_fit,
            "ratios": scaled,
            "constant_f_center": center,
            "constant_f_ratio": c_one,
        }),
    }
}

fn barrier_conservation(s: f64) -> SelftestItem {
    let out = solve_b0(s).and_then(|b0| reconstruct_k(s, b0, 401)).and_then(|k| k.ode_cross_check());
    match out {
        Ok(c) => SelftestItem {
            name: "barrier_first_integral",
            pass: c.first_integral_drift <= 1e-7 && c.max_k_difference <= 1e-7,
            detail: serde_json::to_value(&c).expect("serializable"),
        },
        Err(e) => {
            SelftestItem { name: "barrier_first_integral", pass: false, detail: json!({ "error": e.to_string() }) }
        }
    }
}
