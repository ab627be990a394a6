//! Dormand–Prince 5(4) with error control, FSAL, and event location on the
//! cubic Hermite interpolant of each accepted step.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn new(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-3, h_init: None, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    /// Set when the event function crossed zero; the last sample is the event.
    pub event: bool,
    pub last_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
/// If `event` is given, stops at the first point where it changes sign
/// from positive to non-positive.
pub fn dopri45<const D: usize, F, G>(
    f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    opts: &OdeOptions,
    event: Option<G>,
) -> Result<OdeSolution<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    G: Fn(&[f64; D]) -> f64,
{
    if !(opts.rtol >= 1e-14) {
        return Err(Error::InvalidParameter(format!("rtol {} too small", opts.rtol)));
    }
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = opts.h_init.unwrap_or_else(|| initial_step(&y, &k1, opts, span)).min(opts.h_max).min(span);
    let mut out = OdeSolution { t: vec![t0], y: vec![y0], event: false, last_step: h };
    let mut g_prev = event.as_ref().map(|g| g(&y));
    if span == 0.0 {
        return Ok(out);
    }
    for _ in 0..opts.max_steps {
        let remaining = (t_end - t).abs();
        if remaining <= 1e-15 * t_end.abs().max(1.0) {
            return Ok(out);
        }
        let hs = h.min(remaining);
        let hd = dir * hs;
        let k2 = f(t + C2 * hd, &axpy(&y, hd, &[(A21, &k1)]));
        let k3 = f(t + C3 * hd, &axpy(&y, hd, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hd, &axpy(&y, hd, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * hd, &axpy(&y, hd, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + hd, &axpy(&y, hd, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let yn = axpy(&y, hd, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + hd, &yn);
        let mut err = 0.0;
        let mut finite = true;
        for i in 0..D {
            let e = hd * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(yn[i].abs());
            err += (e / sc) * (e / sc);
            finite &= yn[i].is_finite() && e.is_finite();
        }
        let err = (err / D as f64).sqrt();
        if !finite || err > 1.0 {
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h = hs * fac;
            if h < 1e-14 * t.abs().max(span * 1e-6).max(1e-300) {
                return Err(Error::StepUnderflow(t));
            }
            continue;
        }
        let tn = t + hd;
        if let (Some(g), Some(gp)) = (event.as_ref(), g_prev) {
            let gn = g(&yn);
            if gp > 0.0 && gn <= 0.0 {
                let (te, ye) = locate(&g, t, &y, &k1, tn, &yn, &k7);
                out.t.push(te);
                out.y.push(ye);
                out.event = true;
                out.last_step = hs;
                return Ok(out);
            }
            g_prev = Some(gn);
        }
        t = tn;
        y = yn;
        k1 = k7;
        out.t.push(t);
        out.y.push(y);
        out.last_step = hs;
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (hs * fac).min(opts.h_max);
    }
    Err(Error::NotConverged { iterations: opts.max_steps, residual: (t_end - t).abs() })
}

fn initial_step<const D: usize>(y: &[f64; D], f: &[f64; D], opts: &OdeOptions, span: f64) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..D {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 = d0.max((y[i] / sc).abs());
        d1 = d1.max((f[i] / sc).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}

fn hermite<const D: usize>(
    t0: f64,
    y0: &[f64; D],
    f0: &[f64; D],
    t1: f64,
    y1: &[f64; D],
    f1: &[f64; D],
    t: f64,
) -> [f64; D] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

fn locate<const D: usize, G: Fn(&[f64; D]) -> f64>(
    g: &G,
    t0: f64,
    y0: &[f64; D],
    f0: &[f64; D],
    t1: f64,
    y1: &[f64; D],
    f1: &[f64; D],
) -> (f64, [f64; D]) {
    let (mut a, mut b) = (t0, t1);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if g(&hermite(t0, y0, f0, t1, y1, f1, m)) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    (b, hermite(t0, y0, f0, t1, y1, f1, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoEvent = fn(&[f64; 1]) -> f64;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions::new(1e-10);
        let sol = dopri45(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, &opts, None::<NoEvent>).unwrap();
        let yl = sol.y.last().unwrap()[0];
        assert!((yl - (-3.0f64).exp()).abs() < 1e-9 * (-3.0f64).exp());
        assert_eq!(*sol.t.last().unwrap(), 3.0);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let opts = OdeOptions::new(1e-11);
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let sol = dopri45(f, 1.0, [1f64.sin(), 1f64.cos()], 0.0, &opts, None::<fn(&[f64; 2]) -> f64>).unwrap();
        let y = sol.y.last().unwrap();
        assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn event_location() {
        let opts = OdeOptions::new(1e-10);
        let sol = dopri45(|_, _: &[f64; 1]| [-1.0], 0.0, [1.0], 10.0, &opts, Some(|y: &[f64; 1]| y[0] - 0.25)).unwrap();
        assert!(sol.event);
        assert!((sol.t.last().unwrap() - 0.75).abs() < 1e-12);
    }
}
