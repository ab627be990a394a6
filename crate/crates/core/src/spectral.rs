//! Pseudo-spectral operators on the periodic square.
//!
//! The 2D transform runs row FFTs, an in-place transpose, and row FFTs again,
//! so spectral data lives at `buf[ky * n + kx]`. The inverse undoes this with
//! the same three passes. Inverse Laplacian keeps the Nyquist mode (its symbol
//! is even), first derivatives zero it.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid, ScalarField};

pub struct SpectralWorkspace {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    wave: Vec<f64>,
}

impl SpectralWorkspace {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let wave = (0..n).map(|m| if m < n / 2 { m as f64 } else { m as f64 - n as f64 }).collect();
        Self {
            grid,
            forward,
            inverse,
            buf: vec![Complex64::new(0.0, 0.0); grid.len()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            wave,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn load(&mut self, f: &[f64]) {
        for (b, &v) in self.buf.iter_mut().zip(f) {
            *b = Complex64::new(v, 0.0);
        }
    }

    fn fft2(&mut self) {
        let n = self.grid.n();
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        transpose(&mut self.buf, n);
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
    }

    fn ifft2(&mut self) {
        let n = self.grid.n();
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        transpose(&mut self.buf, n);
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let s = 1.0 / (n * n) as f64;
        for b in self.buf.iter_mut() {
            *b *= s;
        }
    }

    /// Multiply the spectrum by `symbol(kx, ky, nyq_x, nyq_y)`.
    fn apply_symbol(&mut self, symbol: impl Fn(f64, f64, bool, bool) -> Complex64) {
        let n = self.grid.n();
        let half = n / 2;
        for a in 0..n {
            let ky = self.wave[a];
            for b in 0..n {
                let kx = self.wave[b];
                self.buf[a * n + b] *= symbol(kx, ky, b == half, a == half);
            }
        }
    }

    fn store_real(&self, out: &mut [f64]) {
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re;
        }
    }

    pub fn inv_laplacian_into(&mut self, w: &[f64], out: &mut [f64]) {
        self.load(w);
        self.fft2();
        let c = -1.0 / (4.0 * PI * PI);
        self.apply_symbol(|kx, ky, _, _| {
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(c / k2, 0.0)
            }
        });
        self.ifft2();
        self.store_real(out);
    }

    /// Mean-zero solution of `Lap psi = w - mean(w)`.
    pub fn inv_laplacian(&mut self, w: &ScalarField) -> ScalarField {
        let mut out = vec![0.0; self.grid.len()];
        self.inv_laplacian_into(w.values(), &mut out);
        ScalarField::from_values(self.grid, out).expect("finite spectral output")
    }

    pub fn laplacian(&mut self, f: &ScalarField) -> ScalarField {
        self.load(f.values());
        self.fft2();
        let c = -4.0 * PI * PI;
        self.apply_symbol(|kx, ky, _, _| Complex64::new(c * (kx * kx + ky * ky), 0.0));
        self.ifft2();
        let mut out = vec![0.0; self.grid.len()];
        self.store_real(&mut out);
        ScalarField::from_values(self.grid, out).expect("finite spectral output")
    }

    /// Fills `dx`, `dy` with the spectral partial derivatives of `f`.
    /// Both come out of a single inverse transform as real and imaginary parts.
    pub fn gradient_into(&mut self, f: &[f64], dx: &mut [f64], dy: &mut [f64]) {
        self.load(f);
        self.fft2();
        self.apply_symbol(|kx, ky, nx, ny| {
            let ax = if nx { 0.0 } else { 2.0 * PI * kx };
            let ay = if ny { 0.0 } else { 2.0 * PI * ky };
            // i*ax + i*(i*ay)
            Complex64::new(-ay, ax)
        });
        self.ifft2();
        for ((b, x), y) in self.buf.iter().zip(dx.iter_mut()).zip(dy.iter_mut()) {
            *x = b.re;
            *y = b.im;
        }
    }

    pub fn gradient(&mut self, f: &ScalarField) -> (ScalarField, ScalarField) {
        let mut dx = vec![0.0; self.grid.len()];
        let mut dy = vec![0.0; self.grid.len()];
        self.gradient_into(f.values(), &mut dx, &mut dy);
        (
            ScalarField::from_values(self.grid, dx).expect("finite spectral output"),
            ScalarField::from_values(self.grid, dy).expect("finite spectral output"),
        )
    }

    /// `u = (-d_y psi, d_x psi)`.
    pub fn velocity(&mut self, psi: &ScalarField) -> (ScalarField, ScalarField) {
        let (dx, dy) = self.gradient(psi);
        (dy.scaled(-1.0), dx)
    }

    pub fn max_gradient_slice(&mut self, f: &[f64]) -> f64 {
        self.load(f);
        self.fft2();
        self.apply_symbol(|kx, ky, nx, ny| {
            let ax = if nx { 0.0 } else { 2.0 * PI * kx };
            let ay = if ny { 0.0 } else { 2.0 * PI * ky };
            Complex64::new(-ay, ax)
        });
        self.ifft2();
        self.buf.iter().fold(0.0, |m, b| m.max(b.norm()))
    }

    pub fn norm_c1_slice(&mut self, f: &[f64]) -> f64 {
        let c0 = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        c0 + self.max_gradient_slice(f)
    }

    pub fn norm_c1(&mut self, f: &ScalarField) -> f64 {
        assert_eq!(f.grid(), self.grid, "field and workspace grids differ");
        self.norm_c1_slice(f.values())
    }

    /// Discrete Dirichlet energy `h^2 sum |grad f|^2`, by Parseval.
    pub fn dirichlet_slice(&mut self, f: &[f64]) -> f64 {
        let n = self.grid.n();
        self.load(f);
        self.fft2();
        let half = n / 2;
        let mut s = 0.0;
        for a in 0..n {
            let ky = if a == half { 0.0 } else { self.wave[a] };
            for b in 0..n {
                let kx = if b == half { 0.0 } else { self.wave[b] };
                s += (kx * kx + ky * ky) * self.buf[a * n + b].norm_sqr();
            }
        }
        4.0 * PI * PI * s / (n as f64).powi(4)
    }

    /// Removes all modes with `max(|kx|, |ky|) > kmax` and the mean.
    pub fn low_pass(&mut self, f: &ScalarField, kmax: f64) -> ScalarField {
        self.load(f.values());
        self.fft2();
        self.apply_symbol(|kx, ky, _, _| {
            if kx.abs().max(ky.abs()) > kmax || (kx == 0.0 && ky == 0.0) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        self.ifft2();
        let mut out = vec![0.0; self.grid.len()];
        self.store_real(&mut out);
        ScalarField::from_values(self.grid, out).expect("finite spectral output")
    }
}

/// Trigonometric interpolation of the column `f(x_i, .)` at an arbitrary `y`.
/// Nyquist mode is split symmetrically so the interpolant is real.
pub fn interp_column(f: &ScalarField, i: usize, y: f64) -> f64 {
    let g = f.grid();
    let n = g.n();
    let mut col: Vec<Complex64> = (0..n).map(|j| Complex64::new(f.at(i, j), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut col);
    // the grid starts at -1/2: shift to the local coordinate t = y + 1/2
    let t = y + 0.5;
    let mut acc = 0.0;
    for (m, c) in col.iter().enumerate() {
        let k = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        if m == n / 2 {
            acc += c.re * (2.0 * PI * k * t).cos();
        } else {
            let ph = 2.0 * PI * k * t;
            acc += c.re * ph.cos() - c.im * ph.sin();
        }
    }
    acc / n as f64
}

fn transpose(buf: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (ib..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                let j0 = if ib == jb { i + 1 } else { jb };
                for j in j0..(jb + B).min(n) {
                    buf.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
