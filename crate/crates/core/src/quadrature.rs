//! Gauss–Legendre rules and a geometrically graded composite rule for
//! integrands with a weak singularity at one endpoint.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `m`-point rule on `[-1, 1]`, nodes by Newton iteration on `P_m`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        r * self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(c + r * x)).sum::<f64>()
    }

    /// Composite rule on panels halving toward `b`, down to width
    /// `(b - a) 2^-levels`. Suited to integrands whose only non-smooth point
    /// sits at or just beyond `b`.
    pub fn integrate_graded(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, levels: u32) -> f64 {
        let len = b - a;
        let mut lo = a;
        let mut sum = 0.0;
        let mut w = 0.5 * len;
        for _ in 0..levels {
            sum += self.integrate(&f, lo, lo + w);
            lo += w;
            w *= 0.5;
        }
        sum + self.integrate(&f, lo, b)
    }
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let g = GaussLegendre::new(10);
        // degree 19 integrates exactly
        let v = g.integrate(|x| x.powi(18) + 3.0 * x.powi(7), -1.0, 1.0);
        assert!((v - 2.0 / 19.0).abs() < 1e-15);
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn graded_handles_sqrt_endpoint() {
        let g = GaussLegendre::new(20);
        let v = g.integrate_graded(|x| (1.0 - x).powf(0.3), 0.0, 1.0, 50);
        assert!((v - 1.0 / 1.3).abs() < 1e-13);
    }
}
