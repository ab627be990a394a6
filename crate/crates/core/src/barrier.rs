//! The quarter-plane barrier `psi~ = -eps^{s/(s+1)} r^{2/(s+1)} K(theta)` with
//! `4K/(1+s)^2 + K'' = -K^{-s}`, `K(0) = 0`, `K'(pi/4) = 0`.
//!
//! The amplitude `B0 = K(pi/4)` solves `I(B0) = pi/4` for the shooting integral
//! `I(B) = int_0^1 dk / sqrt(a (1-k^2) + b (1-k^{1-s}))`, with
//! `a = 4/(1+s)^2` and `b = 2 B^{-1-s}/(1-s)`. Substituting `k = 1 - u^2`
//! gives the smooth integrand `G(u) = 2 / sqrt(a (2-u^2) + b q(u))`,
//! `q(u) = (1 - (1-u^2)^{1-s}) / u^2`.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::ode::{dopri45, OdeOptions};
use crate::quadrature::GaussLegendre;
use crate::reference::Witness;
use crate::spectral::SpectralWorkspace;

const RULE_ORDER: usize = 24;
const B_LO: f64 = 1e-6;
const B_HI: f64 = 1e6;

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {s}")));
    }
    Ok(())
}

fn a_coef(s: f64) -> f64 {
    4.0 / ((1.0 + s) * (1.0 + s))
}

fn b_coef(s: f64, b: f64) -> f64 {
    2.0 * b.powf(-1.0 - s) / (1.0 - s)
}

/// `(1 - (1-u^2)^{1-s}) / u^2`, cancellation-free.
fn q(s: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 1.0 - s;
    }
    let u2 = u * u;
    -((1.0 - s) * (-u2).ln_1p()).exp_m1() / u2
}

fn integrand(s: f64, a: f64, b: f64, u: f64) -> f64 {
    2.0 / (a * (2.0 - u * u) + b * q(s, u)).sqrt()
}

fn rule() -> &'static GaussLegendre {
    use std::sync::OnceLock;
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(RULE_ORDER))
}

/// `int_0^upper G(u) du`, graded toward the singular point `u = 1`.
fn partial_integral(s: f64, b: f64, upper: f64) -> f64 {
    let a = a_coef(s);
    let bb = b_coef(s, b);
    let gap = (1.0 - upper).max(1e-17);
    let levels = ((upper / gap).log2().ceil() as i64 + 3).clamp(2, 56) as u32;
    rule().integrate_graded(|u| integrand(s, a, bb, u), 0.0, upper, levels)
}

pub fn shooting_integral(s: f64, b: f64) -> Result<f64> {
    check_s(s)?;
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("B must be positive, got {b}")));
    }
    Ok(partial_integral(s, b, 1.0))
}

/// Every root of `I(B) = pi/4` bracketed on a log grid over `[1e-6, 1e6]`,
/// in increasing order.
pub fn b0_roots(s: f64) -> Result<Vec<f64>> {
    check_s(s)?;
    let per_decade = 8;
    let count = (B_HI / B_LO).log10().round() as usize * per_decade;
    let bs: Vec<f64> = (0..=count).map(|k| B_LO * 10f64.powf(k as f64 / per_decade as f64)).collect();
    let vals: Vec<f64> = bs.iter().map(|&b| shooting_integral(s, b).map(|v| v - FRAC_PI_4)).collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for k in 0..count {
        if vals[k] == 0.0 {
            roots.push(bs[k]);
        } else if vals[k] * vals[k + 1] < 0.0 {
            roots.push(bisect(s, bs[k], bs[k + 1], vals[k])?);
        }
    }
    if roots.is_empty() {
        return Err(Error::NoBracket(format!("I(B) = pi/4 not bracketed in [1e-6, 1e6] for s = {s}")));
    }
    Ok(roots)
}

fn bisect(s: f64, mut lo: f64, mut hi: f64, f_lo: f64) -> Result<f64> {
    let sign_lo = f_lo.signum();
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = shooting_integral(s, mid)? - FRAC_PI_4;
        if v == 0.0 {
            return Ok(mid);
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let r = (shooting_integral(s, mid)? - FRAC_PI_4).abs();
    if r > 1e-9 {
        return Err(Error::Consistency(format!("bisection stalled with |I - pi/4| = {r:e}")));
    }
    Ok(mid)
}

/// Smallest root of `I(B) = pi/4`.
pub fn solve_b0(s: f64) -> Result<f64> {
    Ok(b0_roots(s)?[0])
}

/// `K'(0) = sqrt(4 B0^2/(1+s)^2 + 2 B0^{1-s}/(1-s))`.
pub fn kprime0(s: f64, b0: f64) -> f64 {
    (a_coef(s) * b0 * b0 + 2.0 * b0.powf(1.0 - s) / (1.0 - s)).sqrt()
}

/// Conserved quantity of the angular ODE,
/// `K'^2/2 + 2K^2/(1+s)^2 + K^{1-s}/(1-s)`.
pub fn first_integral(s: f64, k: f64, kp: f64) -> f64 {
    0.5 * kp * kp + 2.0 * k * k / ((1.0 + s) * (1.0 + s)) + k.max(0.0).powf(1.0 - s) / (1.0 - s)
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierSolution {
    pub s: f64,
    pub b0: f64,
    pub kprime0: f64,
    pub theta: Vec<f64>,
    pub k: Vec<f64>,
    pub k_prime: Vec<f64>,
}

/// Builds `K` on `m` uniform nodes over `[0, pi/2]` (`m` odd) by inverting
/// `theta(k)` on `[0, pi/4]` and reflecting.
pub fn reconstruct_k(s: f64, b0: f64, m: usize) -> Result<BarrierSolution> {
    check_s(s)?;
    if m < 5 || m.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("m = {m}: need an odd count >= 5")));
    }
    let total = shooting_integral(s, b0)?;
    if (total - FRAC_PI_4).abs() > 1e-7 {
        return Err(Error::Consistency(format!(
            "theta(B0) = {total} differs from pi/4 by {:e}",
            (total - FRAC_PI_4).abs()
        )));
    }
    let a = a_coef(s);
    let bb = b_coef(s, b0);
    let mid = (m - 1) / 2;
    let dtheta = FRAC_PI_2 / (m - 1) as f64;
    let mut k = vec![0.0; m];
    let mut kp = vec![0.0; m];
    // theta = total - J(u), J(u) = int_0^u G, k = B0 (1 - u^2)
    let mut u = 0.0f64;
    for i in (0..=mid).rev() {
        let theta = i as f64 * dtheta;
        let target = total - theta;
        if i == mid {
            u = 0.0;
        } else if i == 0 {
            u = 1.0;
        } else {
            for _ in 0..60 {
                let r = partial_integral(s, b0, u) - target;
                let g = integrand(s, a, bb, u);
                let next = (u - r / g).clamp(0.0, 1.0);
                let done = (next - u).abs() < 1e-15;
                u = next;
                if done {
                    break;
                }
            }
        }
        k[i] = b0 * (1.0 - u) * (1.0 + u);
        kp[i] = 2.0 * b0 * u / integrand(s, a, bb, u);
    }
    k[mid] = b0;
    k[0] = 0.0;
    kp[0] = kprime0(s, b0);
    for i in mid + 1..m {
        k[i] = k[m - 1 - i];
        kp[i] = -kp[m - 1 - i];
    }
    let theta = (0..m).map(|i| i as f64 * dtheta).collect();
    Ok(BarrierSolution { s, b0, kprime0: kprime0(s, b0), theta, k, k_prime: kp })
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeCrossCheck {
    /// Largest relative change of the first integral along the ODE solution.
    pub first_integral_drift: f64,
    /// Largest `|K_ode - K_quadrature|` on `[theta_1, pi/4]`.
    pub max_k_difference: f64,
    pub max_kprime_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierInvariants {
    pub endpoints_zero: bool,
    pub symmetric: bool,
    pub positive: bool,
    pub increasing_to_quarter: bool,
    pub kprime0_error: f64,
    pub sin_ratio: (f64, f64),
}

impl BarrierSolution {
    pub fn m(&self) -> usize {
        self.theta.len()
    }

    fn dtheta(&self) -> f64 {
        FRAC_PI_2 / (self.m() - 1) as f64
    }

    /// `C(s) = B0^{-(1+s)/2}`, the largest radius factor keeping `psi~ > -eps`
    /// on the arc `r = C(s) sqrt(eps)`.
    pub fn radius_factor(&self) -> f64 {
        self.b0.powf(-(1.0 + self.s) / 2.0)
    }

    /// Cubic Hermite interpolation of `K` at `theta` in `[0, pi/2]`.
    pub fn eval_k(&self, theta: f64) -> f64 {
        let t = theta.clamp(0.0, FRAC_PI_2);
        let h = self.dtheta();
        let i = ((t / h) as usize).min(self.m() - 2);
        let s = (t - self.theta[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.k[i] + h10 * h * self.k_prime[i] + h01 * self.k[i + 1] + h11 * h * self.k_prime[i + 1]
    }

    /// Range of `K(theta)/sin(2 theta)` over the grid, with `K'(0)/2` at the ends.
    pub fn sin_ratio(&self) -> (f64, f64) {
        let mut lo = 0.5 * self.kprime0;
        let mut hi = lo;
        for i in 1..self.m() - 1 {
            let r = self.k[i] / (2.0 * self.theta[i]).sin();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    pub fn invariants(&self) -> BarrierInvariants {
        let m = self.m();
        let mid = (m - 1) / 2;
        BarrierInvariants {
            endpoints_zero: self.k[0] == 0.0 && self.k[m - 1] == 0.0,
            symmetric: (0..m).all(|i| self.k[i] == self.k[m - 1 - i]),
            positive: self.k[1..m - 1].iter().all(|&v| v > 0.0),
            increasing_to_quarter: (0..mid).all(|i| self.k[i + 1] > self.k[i]),
            kprime0_error: (self.k_prime[0] * self.k_prime[0]
                - (a_coef(self.s) * self.b0 * self.b0 + 2.0 * self.b0.powf(1.0 - self.s) / (1.0 - self.s)))
                .abs(),
            sin_ratio: self.sin_ratio(),
        }
    }

    /// `4K/(1+s)^2 + K'' + K^{-s}` by second differences, maximum over
    /// interior nodes with `theta` in `[lo, hi]`.
    pub fn ode_residual(&self, lo: f64, hi: f64) -> f64 {
        let a = a_coef(self.s);
        let h = self.dtheta();
        (1..self.m() - 1)
            .filter(|&i| self.theta[i] >= lo && self.theta[i] <= hi)
            .map(|i| {
                let d2 = (self.k[i + 1] - 2.0 * self.k[i] + self.k[i - 1]) / (h * h);
                (a * self.k[i] + d2 + self.k[i].powf(-self.s)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Integrates the ODE backward from `(pi/4, B0, 0)` node by node and
    /// compares with the quadrature route.
    pub fn ode_cross_check(&self) -> Result<OdeCrossCheck> {
        let s = self.s;
        let a = a_coef(s);
        let f = move |_: f64, y: &[f64; 2]| [y[1], -a * y[0] - y[0].max(1e-300).powf(-s)];
        let mid = (self.m() - 1) / 2;
        let e0 = first_integral(s, self.b0, 0.0);
        let mut opts = OdeOptions::new(1e-12);
        opts.atol = 1e-15;
        let mut y = [self.b0, 0.0];
        let mut out = OdeCrossCheck { first_integral_drift: 0.0, max_k_difference: 0.0, max_kprime_difference: 0.0 };
        for i in (1..mid).rev() {
            let sol = dopri45(f, self.theta[i + 1], y, self.theta[i], &opts, None::<fn(&[f64; 2]) -> f64>)?;
            y = *sol.y.last().unwrap();
            opts.h_init = Some(sol.last_step);
            out.first_integral_drift = out.first_integral_drift.max((first_integral(s, y[0], y[1]) - e0).abs() / e0);
            out.max_k_difference = out.max_k_difference.max((y[0] - self.k[i]).abs());
            out.max_kprime_difference = out.max_kprime_difference.max((y[1] - self.k_prime[i]).abs());
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
        w.write_record(["theta", "K", "K_prime"]).map_err(|e| Error::Format(e.to_string()))?;
        for i in 0..self.m() {
            w.write_record([self.theta[i].to_string(), self.k[i].to_string(), self.k_prime[i].to_string()])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples of `psi~` on the quarter disk `r <= C(s) sqrt(eps)`, `x, y >= 0`.
/// Points outside carry NaN.
#[derive(Debug, Clone)]
pub struct BarrierField {
    pub grid: Grid,
    pub epsilon: f64,
    pub radius: f64,
    values: Vec<f64>,
}

impl BarrierField {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.values[self.grid.idx(i, j)];
        (!v.is_nan()).then_some(v)
    }

    /// Grid points with a barrier value, as `(i, j, value)`.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.grid.n();
        (0..n).flat_map(move |i| (0..n).filter_map(move |j| self.get(i, j).map(|v| (i, j, v))))
    }

    /// The field with zeros in place of the sentinel, for dumping.
    pub fn to_field(&self) -> ScalarField {
        ScalarField::from_values(self.grid, self.values.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect())
            .expect("finite barrier values")
    }
}

pub fn barrier_value(bs: &BarrierSolution, eps: f64, x: f64, y: f64) -> f64 {
    let r = x.hypot(y);
    if r == 0.0 {
        return 0.0;
    }
    let s = bs.s;
    -eps.powf(s / (s + 1.0)) * r.powf(2.0 / (s + 1.0)) * bs.eval_k(y.atan2(x))
}

pub fn barrier_field(bs: &BarrierSolution, eps: f64, grid: Grid) -> BarrierField {
    let radius = bs.radius_factor() * eps.sqrt();
    let n = grid.n();
    let mut values = vec![f64::NAN; grid.len()];
    for i in grid.origin()..n {
        let x = grid.coord(i);
        for j in grid.origin()..n {
            let y = grid.coord(j);
            if x.hypot(y) <= radius {
                values[grid.idx(i, j)] = barrier_value(bs, eps, x, y);
            }
        }
    }
    BarrierField { grid, epsilon: eps, radius, values }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub epsilon: f64,
    pub s: f64,
    pub radius: f64,
    pub tol_disc: f64,
    pub points: usize,
    pub violations: usize,
    /// `min (psi~ + tol - phi)`; negative means a violation.
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    /// `min (psi~ - phi)` over grid points within one cell of the arc:
    /// the boundary hypothesis of the comparison.
    pub arc_margin: f64,
    pub pass: bool,
}

/// Checks `phi <= psi~ + 5 h max|grad phi|` on the quarter disk.
pub fn comparison_check(phi: &ScalarField, bs: &BarrierSolution, eps: f64) -> ComparisonReport {
    let grid = phi.grid();
    let bf = barrier_field(bs, eps, grid);
    let mut ws = SpectralWorkspace::new(grid);
    let grad_max = ws.max_gradient_slice(phi.values());
    let tol = 5.0 * grid.h() * grad_max;
    let mut rep = ComparisonReport {
        epsilon: eps,
        s: bs.s,
        radius: bf.radius,
        tol_disc: tol,
        points: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        witness: None,
        arc_margin: f64::INFINITY,
        pass: true,
    };
    let mut worst_excess = f64::NEG_INFINITY;
    for (i, j, v) in bf.points() {
        rep.points += 1;
        let p = phi.at(i, j);
        let margin = v + tol - p;
        rep.worst_margin = rep.worst_margin.min(margin);
        let (x, y) = (grid.coord(i), grid.coord(j));
        if x.hypot(y) >= bf.radius - grid.h() {
            rep.arc_margin = rep.arc_margin.min(v - p);
        }
        if margin < 0.0 {
            rep.violations += 1;
            if p - v > worst_excess {
                worst_excess = p - v;
                rep.witness = Some(Witness { x, y, value: p - v });
            }
        }
    }
    rep.pass = rep.violations == 0 && rep.points > 0;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_limit_and_value() {
        assert!((q(0.5, 0.0) - 0.5).abs() < 1e-15);
        assert!((q(0.5, 1e-9) - 0.5).abs() < 1e-9);
        let u: f64 = 0.3;
        let direct = (1.0 - (1.0 - u * u).powf(0.5)) / (u * u);
        assert!((q(0.5, u) - direct).abs() < 1e-14);
        assert!((q(0.5, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(shooting_integral(0.5, 0.0).is_err());
        assert!(shooting_integral(1.0, 1.0).is_err());
        assert!(reconstruct_k(0.5, 0.7, 100).is_err());
    }

    #[test]
    fn limits_of_the_shooting_integral() {
        let v = shooting_integral(0.5, 1e6).unwrap();
        assert!((v - 1.5 * FRAC_PI_4).abs() < 1e-3);
        assert!(shooting_integral(0.5, 1e-8).unwrap() < 1e-3);
    }

    #[test]
    fn quarter_point_is_b0() {
        let s = 0.5;
        let b0 = solve_b0(s).unwrap();
        let bs = reconstruct_k(s, b0, 201).unwrap();
        assert_eq!(bs.k[100], b0);
        assert!((bs.eval_k(FRAC_PI_4) - b0).abs() < 1e-15);
        let inv = bs.invariants();
        assert!(inv.endpoints_zero && inv.symmetric && inv.positive && inv.increasing_to_quarter);
    }

    #[test]
    fn barrier_vanishes_on_axes() {
        let s = 0.5;
        let bs = reconstruct_k(s, solve_b0(s).unwrap(), 401).unwrap();
        assert_eq!(barrier_value(&bs, 0.02, 0.1, 0.0).abs(), 0.0);
        assert!(barrier_value(&bs, 0.02, 0.0, 0.1).abs() < 1e-15);
        let r: f64 = 0.1;
        let x = r / 2f64.sqrt();
        let expect = -0.02f64.powf(s / (s + 1.0)) * r.powf(2.0 / (s + 1.0)) * bs.b0;
        assert!((barrier_value(&bs, 0.02, x, x) - expect).abs() < 1e-14);
    }
}
