//! Particle transport along the invariant axis `x = 0` and a general 2D tracer.
//!
//! On the axis the flow is one-dimensional, `dy/dt = u^2(0, y) = d_x psi(0, y)`.
//! It is integrated in `z = ln y`. Below the resolved range `y < y_min` the
//! profile is continued by a fitted tail: a power law `-c y^p` (finite arrival
//! when `p < 1`) or `c y ln y` (double-exponential approach).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::interp::{column_cubic, BicubicField, Pchip};
use crate::ode::{dopri45, OdeOptions};
use crate::reports::{linear_fit, LineFit};
use crate::spectral::SpectralWorkspace;

pub const ARRIVAL_Y: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TailModel {
    /// `u^2 = -c y^p`
    PowerLaw { c: f64, p: f64 },
    /// `u^2 = c y ln y`
    LogLinear { c: f64 },
}

impl TailModel {
    pub fn u2(&self, y: f64) -> f64 {
        match *self {
            Self::PowerLaw { c, p } => -c * y.powf(p),
            Self::LogLinear { c } => c * y * y.ln(),
        }
    }

    /// `d(ln y)/dt` as a function of `z = ln y`, without forming `y`.
    pub fn log_rate(&self, z: f64) -> f64 {
        match *self {
            Self::PowerLaw { c, p } => -c * ((p - 1.0) * z).exp(),
            Self::LogLinear { c } => c * z,
        }
    }

    /// Time to reach the origin from `y`, when finite.
    pub fn arrival_from(&self, y: f64) -> Option<f64> {
        match *self {
            Self::PowerLaw { c, p } if p < 1.0 && c > 0.0 => Some(y.powf(1.0 - p) / (c * (1.0 - p))),
            _ => None,
        }
    }
}

/// A velocity law on the positive axis.
pub trait AxisFlow {
    fn u2(&self, y: f64) -> f64;
    /// Closed-form time from `y` (tiny) to 0, if the tail reaches the origin.
    fn arrival_from(&self, y: f64) -> Option<f64>;
    fn y_max(&self) -> f64 {
        0.5
    }
    /// `d(ln y)/dt` at `z = ln y`.
    fn log_rate(&self, z: f64) -> f64 {
        let y = z.exp();
        self.u2(y) / y
    }
}

impl AxisFlow for TailModel {
    fn u2(&self, y: f64) -> f64 {
        TailModel::u2(self, y)
    }

    fn arrival_from(&self, y: f64) -> Option<f64> {
        TailModel::arrival_from(self, y)
    }

    fn log_rate(&self, z: f64) -> f64 {
        TailModel::log_rate(self, z)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisProfile {
    pub y_samples: Vec<f64>,
    pub u2_values: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
    pub fit_decade: (f64, f64),
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub fit_r2: f64,
    /// `c` in `u^2 ~ c y ln y` over the fit decade.
    pub log_constant: f64,
    /// Range of `u^2 / (y ln y)` over the fit decade.
    pub log_ratio: (f64, f64),
    pub power_rms: f64,
    pub log_rms: f64,
    pub tail: TailModel,
    pub nonnegative_samples: usize,
    #[serde(skip)]
    interp: Option<Pchip>,
}

pub fn axis_profile(psi: &ScalarField, y_min: f64, y_max: f64, count: usize) -> Result<AxisProfile> {
    let g = psi.grid();
    if y_min < 4.0 * g.h() * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!("y_min {y_min} below 4h = {}", 4.0 * g.h())));
    }
    if !(y_max > 10.0 * y_min && y_max < 0.5) {
        return Err(Error::InvalidParameter(format!("need 10 y_min < y_max < 1/2, got [{y_min}, {y_max}]")));
    }
    if count < 16 {
        return Err(Error::InvalidParameter("need at least 16 samples".into()));
    }
    let mut ws = SpectralWorkspace::new(g);
    let (dx, _) = ws.gradient(psi);
    let ratio = (y_max / y_min).ln();
    let y_samples: Vec<f64> = (0..count).map(|k| y_min * (ratio * k as f64 / (count - 1) as f64).exp()).collect();
    let u2_values: Vec<f64> = y_samples.iter().map(|&y| column_cubic(&dx, g.origin(), y)).collect();
    let nonnegative_samples = u2_values.iter().filter(|&&v| v >= 0.0).count();

    let decade = (y_min, 10.0 * y_min);
    let fit_pts: Vec<(f64, f64)> = y_samples
        .iter()
        .zip(&u2_values)
        .filter(|(&y, &u)| y <= decade.1 * (1.0 + 1e-12) && u < 0.0)
        .map(|(&y, &u)| (y, -u))
        .collect();
    if fit_pts.len() < 3 {
        return Err(Error::InvalidParameter("fewer than 3 negative samples in the fit decade".into()));
    }
    let lx: Vec<f64> = fit_pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = fit_pts.iter().map(|p| p.1.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    let power_rms = rms(lx.iter().zip(&ly).map(|(x, y)| y - fit.intercept - fit.slope * x));
    let log_shift: Vec<f64> = fit_pts.iter().map(|&(y, v)| v.ln() - (y * -y.ln()).ln()).collect();
    let log_c = log_shift.iter().sum::<f64>() / log_shift.len() as f64;
    let log_rms = rms(log_shift.iter().map(|v| v - log_c));
    let ratios: Vec<f64> = fit_pts.iter().map(|&(y, v)| v / (y * -y.ln())).collect();
    let log_ratio = (
        ratios.iter().copied().fold(f64::INFINITY, f64::min),
        ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let tail = if log_rms < power_rms {
        TailModel::LogLinear { c: log_c.exp() }
    } else {
        TailModel::PowerLaw { c: fit.intercept.exp(), p: fit.slope }
    };
    let interp = Pchip::new(y_samples.clone(), u2_values.clone())?;
    Ok(AxisProfile {
        y_samples,
        u2_values,
        y_min,
        y_max,
        fit_decade: decade,
        fitted_exponent: fit.slope,
        fitted_constant: fit.intercept.exp(),
        fit_r2: fit.r2,
        log_constant: log_c.exp(),
        log_ratio,
        power_rms,
        log_rms,
        tail,
        nonnegative_samples,
        interp: Some(interp),
    })
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (s / n.max(1) as f64).sqrt()
}

impl AxisFlow for AxisProfile {
    fn u2(&self, y: f64) -> f64 {
        if y < self.y_min {
            self.tail.u2(y)
        } else {
            let p = self.interp.as_ref().expect("profile built by axis_profile");
            p.eval(y.min(self.y_max)).expect("inside the sampled range")
        }
    }

    fn arrival_from(&self, y: f64) -> Option<f64> {
        self.tail.arrival_from(y)
    }

    fn y_max(&self) -> f64 {
        self.y_max
    }

    fn log_rate(&self, z: f64) -> f64 {
        let y = z.exp();
        if y < self.y_min {
            self.tail.log_rate(z)
        } else {
            self.u2(y) / y
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    FiniteArrival,
    DoubleExponential,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub y0: f64,
    pub t_max: f64,
    pub rtol: f64,
    pub times: Vec<f64>,
    /// `y(t)`; underflows to 0 deep in a double-exponential approach.
    pub positions: Vec<f64>,
    pub log_positions: Vec<f64>,
    pub arrival_time: Option<f64>,
    pub diagnostic: Diagnostic,
    /// Fit of `ln(-ln y)` against `t` on `[t_max/2, t_max]`.
    pub double_exp_fit: Option<LineFit>,
}

pub fn integrate_axis(flow: &dyn AxisFlow, y0: f64, t_max: f64, rtol: f64) -> Result<TrajectoryRecord> {
    if !(rtol >= 1e-12) {
        return Err(Error::InvalidParameter(format!("rtol {rtol} below 1e-12")));
    }
    if !(y0 > 0.0 && y0 <= flow.y_max()) {
        return Err(Error::Domain(format!("y0 = {y0} outside (0, {}]", flow.y_max())));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("t_max {t_max} must be positive")));
    }
    let finite_tail = flow.arrival_from(ARRIVAL_Y).is_some();
    let rhs = |_: f64, z: &[f64; 1]| [flow.log_rate(z[0])];
    // local tolerance a decade below the requested global accuracy
    let mut opts = OdeOptions::new(0.1 * rtol);
    opts.atol = rtol * 1e-3;
    opts.h_max = t_max / 200.0;
    let z_stop = ARRIVAL_Y.ln();
    let event = finite_tail.then_some(move |z: &[f64; 1]| z[0] - z_stop);
    let sol = dopri45(rhs, 0.0, [y0.ln()], t_max, &opts, event)?;
    let times = sol.t.clone();
    let log_positions: Vec<f64> = sol.y.iter().map(|z| z[0]).collect();
    let positions = log_positions.iter().map(|z| z.exp()).collect();

    let mut rec = TrajectoryRecord {
        y0,
        t_max,
        rtol,
        times,
        positions,
        log_positions,
        arrival_time: None,
        diagnostic: Diagnostic::Inconclusive,
        double_exp_fit: None,
    };
    if sol.event {
        let t_stop = *rec.times.last().unwrap();
        rec.arrival_time = flow.arrival_from(ARRIVAL_Y).map(|tail| t_stop + tail);
        rec.diagnostic = Diagnostic::FiniteArrival;
        return Ok(rec);
    }
    let (ts, ls): (Vec<f64>, Vec<f64>) = rec
        .times
        .iter()
        .zip(&rec.log_positions)
        .filter(|(&t, _)| t >= 0.5 * t_max)
        .map(|(&t, &z)| (t, (-z).ln()))
        .unzip();
    if ts.len() >= 3 {
        if let Ok(fit) = linear_fit(&ts, &ls) {
            if fit.r2 >= 0.99 {
                rec.diagnostic = Diagnostic::DoubleExponential;
            }
            rec.double_exp_fit = Some(fit);
        }
    }
    Ok(rec)
}

impl TrajectoryRecord {
    pub fn strictly_decreasing(&self) -> bool {
        self.log_positions.windows(2).all(|w| w[1] < w[0])
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let fe = |e: csv::Error| Error::Format(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(fe)?;
        w.write_record(["t", "y", "ln_y"]).map_err(fe)?;
        for k in 0..self.times.len() {
            w.write_record([
                self.times[k].to_string(),
                self.positions[k].to_string(),
                self.log_positions[k].to_string(),
            ])
            .map_err(fe)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Path2d {
    pub times: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub psi_start: f64,
    pub max_psi_drift: f64,
    pub length: f64,
    pub grad_max: f64,
}

/// Advects a particle by `(-d_y p, d_x p)` where `p` is the bicubic interpolant
/// of `psi`, so `p` is conserved by the exact flow. Coordinates are not wrapped
/// in the output; evaluation wraps periodically.
pub fn trace_2d(psi: &ScalarField, start: (f64, f64), t_max: f64, rtol: f64) -> Result<Path2d> {
    if !(rtol >= 1e-12) {
        return Err(Error::InvalidParameter(format!("rtol {rtol} below 1e-12")));
    }
    let b = BicubicField::new(psi);
    let rhs = |_: f64, p: &[f64; 2]| {
        let (_, px, py) = b.eval(p[0], p[1]);
        [-py, px]
    };
    let mut opts = OdeOptions::new(rtol);
    opts.atol = rtol * 1e-3;
    opts.h_max = t_max / 100.0;
    let sol = dopri45(rhs, 0.0, [start.0, start.1], t_max, &opts, None::<fn(&[f64; 2]) -> f64>)?;
    let psi_start = b.eval(start.0, start.1).0;
    let mut max_psi_drift: f64 = 0.0;
    let mut length = 0.0;
    for (k, p) in sol.y.iter().enumerate() {
        max_psi_drift = max_psi_drift.max((b.eval(p[0], p[1]).0 - psi_start).abs());
        if k > 0 {
            let q = sol.y[k - 1];
            length += (p[0] - q[0]).hypot(p[1] - q[1]);
        }
    }
    let grad_max = SpectralWorkspace::new(psi.grid()).max_gradient_slice(psi.values());
    Ok(Path2d {
        times: sol.t,
        points: sol.y.iter().map(|p| (p[0], p[1])).collect(),
        psi_start,
        max_psi_drift,
        length,
        grad_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_arrival() {
        let (c, s) = (0.7, 0.5);
        let law = TailModel::PowerLaw { c, p: 1.0 - s };
        let rec = integrate_axis(&law, 0.1, 10.0, 1e-9).unwrap();
        assert_eq!(rec.diagnostic, Diagnostic::FiniteArrival);
        let exact = 0.1f64.powf(s) / (c * s);
        assert!((rec.arrival_time.unwrap() - exact).abs() <= 1e-8 * exact);
        assert!(rec.strictly_decreasing());
    }

    #[test]
    fn log_linear_double_exponential() {
        let c = 0.8;
        let law = TailModel::LogLinear { c };
        let rec = integrate_axis(&law, 0.1, 6.0, 1e-10).unwrap();
        assert_eq!(rec.diagnostic, Diagnostic::DoubleExponential);
        assert!((rec.double_exp_fit.unwrap().slope - c).abs() < 1e-6);
        assert!(rec.arrival_time.is_none());
    }

    #[test]
    fn rejects_tiny_rtol() {
        let law = TailModel::PowerLaw { c: 1.0, p: 0.5 };
        assert!(integrate_axis(&law, 0.1, 1.0, 1e-13).is_err());
    }
}
