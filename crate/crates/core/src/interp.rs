//! Interpolation: monotone PCHIP in 1D, four-point Lagrange along grid
//! columns, and periodic bicubic Hermite patches for 2D tracing.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::spectral::SpectralWorkspace;

/// Fritsch–Carlson monotone cubic through `(x_k, y_k)`, `x` increasing.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidParameter("pchip needs at least two matching samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("pchip abscissae must increase".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], del[0], del[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(t >= lo && t <= hi) {
            return Err(Error::Domain(format!("{t} outside interpolation range [{lo}, {hi}]")));
        }
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(k) => return Ok(self.y[k]),
            Err(k) => k - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        Ok(hermite(s, h, self.y[k], self.d[k], self.y[k + 1], self.d[k + 1]))
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

fn hermite(s: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let (a0, b0, a1, b1) = basis(s);
    a0 * y0 + b0 * h * d0 + a1 * y1 + b1 * h * d1
}

fn basis(s: f64) -> (f64, f64, f64, f64) {
    ((1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s), s * (1.0 - s) * (1.0 - s), s * s * (3.0 - 2.0 * s), s * s * (s - 1.0))
}

fn basis_deriv(s: f64) -> (f64, f64, f64, f64) {
    (6.0 * s * s - 6.0 * s, 3.0 * s * s - 4.0 * s + 1.0, -6.0 * s * s + 6.0 * s, 3.0 * s * s - 2.0 * s)
}

/// Four-point Lagrange interpolation of the grid column `f(x_i, .)` at `y`.
pub fn column_cubic(f: &ScalarField, i: usize, y: f64) -> f64 {
    let g = f.grid();
    let n = g.n() as isize;
    let t = (y + 0.5) * g.n() as f64;
    let j = t.floor();
    let s = t - j;
    let j = j as isize;
    let v = |k: isize| f.at(i, (j + k).rem_euclid(n) as usize);
    let w_m1 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w0 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w1 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w2 = (s + 1.0) * s * (s - 1.0) / 6.0;
    w_m1 * v(-1) + w0 * v(0) + w1 * v(1) + w2 * v(2)
}

/// C1 piecewise bicubic interpolant of a periodic field, built from
/// spectral `f`, `f_x`, `f_y`, `f_xy` at the nodes.
#[derive(Debug, Clone)]
pub struct BicubicField {
    grid: Grid,
    f: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    fxy: Vec<f64>,
}

impl BicubicField {
    pub fn new(f: &ScalarField) -> Self {
        let grid = f.grid();
        let mut ws = SpectralWorkspace::new(grid);
        let (fx, fy) = ws.gradient(f);
        let (fxy, _) = ws.gradient(&fy);
        Self { grid, f: f.values().to_vec(), fx: fx.into_values(), fy: fy.into_values(), fxy: fxy.into_values() }
    }

    /// `(p, p_x, p_y)` at an arbitrary point, wrapped periodically.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let n = self.grid.n();
        let h = self.grid.h();
        let locate = |c: f64| {
            let t = (c + 0.5).rem_euclid(1.0) * n as f64;
            let k = (t.floor() as usize).min(n - 1);
            (k, t - k as f64)
        };
        let (i, s) = locate(x);
        let (j, t) = locate(y);
        let ii = [i, (i + 1) % n];
        let jj = [j, (j + 1) % n];
        let (a0, b0, a1, b1) = basis(s);
        let (da0, db0, da1, db1) = basis_deriv(s);
        let (c0, e0, c1, e1) = basis(t);
        let (dc0, de0, dc1, de1) = basis_deriv(t);
        let ax = [(a0, b0, da0, db0), (a1, b1, da1, db1)];
        let ay = [(c0, e0, dc0, de0), (c1, e1, dc1, de1)];
        let (mut p, mut px, mut py) = (0.0, 0.0, 0.0);
        for (cx, &(a, b, da, db)) in ax.iter().enumerate() {
            for (cy, &(c, e, dc, de)) in ay.iter().enumerate() {
                let k = self.grid.idx(ii[cx], jj[cy]);
                let (f, fx, fy, fxy) = (self.f[k], h * self.fx[k], h * self.fy[k], h * h * self.fxy[k]);
                p += f * a * c + fx * b * c + fy * a * e + fxy * b * e;
                px += f * da * c + fx * db * c + fy * da * e + fxy * db * e;
                py += f * a * dc + fx * b * dc + fy * a * de + fxy * b * de;
            }
        }
        (p, px / h, py / h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pchip_reproduces_samples_and_monotonicity() {
        let x: Vec<f64> = (0..20).map(|k| (k as f64 * 0.3).exp()).collect();
        let y: Vec<f64> = x.iter().map(|v| -v.sqrt()).collect();
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for k in 0..20 {
            assert_eq!(p.eval(x[k]).unwrap(), y[k]);
        }
        let mut prev = p.eval(x[0]).unwrap();
        for k in 1..1000 {
            let t = x[0] + (x[19] - x[0]) * k as f64 / 1000.0;
            let v = p.eval(t).unwrap();
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert!(p.eval(0.5).is_err());
    }

    #[test]
    fn column_cubic_exact_for_cubics_locally() {
        let g = Grid::new(64).unwrap();
        let f = ScalarField::from_fn(g, |_, y| 1.0 + y - 2.0 * y * y + 3.0 * y * y * y);
        let y = 0.1234;
        let e = 1.0 + y - 2.0 * y * y + 3.0 * y * y * y;
        assert!((column_cubic(&f, 3, y) - e).abs() < 1e-13);
    }

    #[test]
    fn bicubic_matches_smooth_field() {
        let g = Grid::new(128).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        let b = BicubicField::new(&f);
        let (x, y) = (0.123, -0.377);
        let (p, px, py) = b.eval(x, y);
        assert!((p - (2.0 * PI * x).sin() * (2.0 * PI * y).sin()).abs() < 1e-7);
        assert!((px - 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin()).abs() < 1e-4);
        assert!((py - 2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()).abs() < 1e-4);
        let (q, _, _) = b.eval(x + 1.0, y - 2.0);
        assert!((p - q).abs() < 1e-12);
    }
}
