//! Odd nonlinearities `F` for the semilinear problem `Lap psi = F(psi)`.
//!
//! Three families: a smoothed `-sgn`, the singular power law
//! `-eps^s / x^s` on `(0, eps)` extended by `-1`, and its truncation at
//! height `2^{ns}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ForcingProfile {
    MollifiedSign { epsilon: f64 },
    Singular { epsilon: f64, s: f64 },
    Truncated { epsilon: f64, s: f64, levels: u32 },
}

/// Mollifier `K(x) = (15/16)(1 - x^2)^2` on `[-1, 1]`.
pub fn mollifier(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let a = 1.0 - x * x;
        15.0 / 16.0 * a * a
    }
}

impl ForcingProfile {
    pub fn mollified(epsilon: f64) -> Result<Self> {
        Self::MollifiedSign { epsilon }.validated()
    }

    pub fn singular(epsilon: f64, s: f64) -> Result<Self> {
        Self::Singular { epsilon, s }.validated()
    }

    pub fn truncated(epsilon: f64, s: f64, levels: u32) -> Result<Self> {
        Self::Truncated { epsilon, s, levels }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let eps = self.epsilon();
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        if let Some(s) = self.exponent() {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {s}")));
            }
        }
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        match *self {
            Self::MollifiedSign { epsilon } | Self::Singular { epsilon, .. } | Self::Truncated { epsilon, .. } => {
                epsilon
            }
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Self::MollifiedSign { .. } => None,
            Self::Singular { s, .. } | Self::Truncated { s, .. } => Some(s),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::MollifiedSign { .. } => "mollified",
            Self::Singular { .. } => "singular",
            Self::Truncated { .. } => "truncated",
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = *self;
        match &mut p {
            Self::MollifiedSign { epsilon: e }
            | Self::Singular { epsilon: e, .. }
            | Self::Truncated { epsilon: e, .. } => *e = epsilon,
        }
        p.validated()
    }

    /// Supremum of `|F|`, when finite.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            Self::MollifiedSign { .. } => Some(1.0),
            Self::Singular { .. } => None,
            Self::Truncated { s, levels, .. } => Some(2f64.powf(levels as f64 * s)),
        }
    }

    /// Singular and truncated states are kept outside `psi_0` pointwise.
    pub fn encloses_reference(&self) -> bool {
        !matches!(self, Self::MollifiedSign { .. })
    }

    pub fn default_floor(&self) -> f64 {
        self.epsilon() * 2f64.powi(-24)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("forcing argument {x}")));
        }
        if x == 0.0 {
            return match self {
                Self::Singular { .. } => Err(Error::Domain("singular forcing at 0".into())),
                _ => Ok(0.0),
            };
        }
        let a = x.abs();
        let sign = x.signum();
        let v = match *self {
            Self::MollifiedSign { epsilon } => {
                let t = a / epsilon;
                if t >= 1.0 {
                    -1.0
                } else {
                    -15.0 / 8.0 * (t - 2.0 * t * t * t / 3.0 + t.powi(5) / 5.0)
                }
            }
            Self::Singular { epsilon, s } => singular_branch(a, epsilon, s),
            Self::Truncated { epsilon, s, levels } => {
                let cut = epsilon * 2f64.powi(-(levels as i32));
                if a < cut {
                    -(2f64.powf(levels as f64 * s))
                } else {
                    singular_branch(a, epsilon, s)
                }
            }
        };
        Ok(sign * v)
    }

    pub fn eval_derivative(&self, x: f64) -> Result<f64> {
        match *self {
            Self::MollifiedSign { epsilon } => {
                let t = x / epsilon;
                if t.abs() >= 1.0 {
                    Ok(0.0)
                } else {
                    let a = 1.0 - t * t;
                    Ok(-15.0 / 8.0 * a * a / epsilon)
                }
            }
            _ => Err(Error::InvalidParameter(format!(
                "derivative only available for the mollified family, not {}",
                self.family()
            ))),
        }
    }

    /// Pointwise `F(f)`. For the singular family values with `|v| < floor`
    /// are clamped to `sign(v) floor`; exact zeros on the lattice lines map to 0.
    pub fn apply(&self, f: &ScalarField, floor: f64) -> Result<ScalarField> {
        let mut out = Vec::with_capacity(f.values().len());
        self.apply_into(f, floor, &mut out)?;
        ScalarField::from_values(f.grid(), out)
    }

    pub fn apply_into(&self, f: &ScalarField, floor: f64, out: &mut Vec<f64>) -> Result<()> {
        if !(floor >= 0.0) {
            return Err(Error::InvalidParameter(format!("floor must be >= 0, got {floor}")));
        }
        let g = f.grid();
        let n = g.n();
        out.clear();
        let singular = matches!(self, Self::Singular { .. });
        for i in 0..n {
            for j in 0..n {
                let v = f.at(i, j);
                let w = if v == 0.0 {
                    if singular && floor == 0.0 && !g.on_separatrix(i, j) {
                        return Err(Error::Domain(format!("zero value off the separatrices at ({i}, {j})")));
                    }
                    0.0
                } else if singular && v.abs() < floor {
                    self.eval(v.signum() * floor)?
                } else {
                    self.eval(v)?
                };
                out.push(w);
            }
        }
        Ok(())
    }
}

fn singular_branch(a: f64, epsilon: f64, s: f64) -> f64 {
    if a >= epsilon {
        -1.0
    } else {
        -(epsilon / a).powf(s)
    }
}

impl fmt::Display for ForcingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::MollifiedSign { epsilon } => write!(f, "mollified:eps={epsilon:e}"),
            Self::Singular { epsilon, s } => write!(f, "singular:eps={epsilon:e},s={s}"),
            Self::Truncated { epsilon, s, levels } => {
                write!(f, "truncated:eps={epsilon:e},s={s},n={levels}")
            }
        }
    }
}

impl FromStr for ForcingProfile {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let bad = |m: &str| Error::Config(format!("profile '{spec}': {m}"));
        let (family, rest) = spec.trim().split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let mut eps = None;
        let mut s = None;
        let mut levels = None;
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v = v.trim();
            match k.trim() {
                "eps" => eps = Some(v.parse::<f64>().map_err(|_| bad("eps is not a number"))?),
                "s" => s = Some(v.parse::<f64>().map_err(|_| bad("s is not a number"))?),
                "n" => levels = Some(v.parse::<u32>().map_err(|_| bad("n is not an integer"))?),
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        let eps = eps.ok_or_else(|| bad("missing eps"))?;
        let p = match family.trim() {
            "mollified" => Self::MollifiedSign { epsilon: eps },
            "singular" => Self::Singular { epsilon: eps, s: s.ok_or_else(|| bad("missing s"))? },
            "truncated" => Self::Truncated {
                epsilon: eps,
                s: s.ok_or_else(|| bad("missing s"))?,
                levels: levels.ok_or_else(|| bad("missing n"))?,
            },
            other => return Err(bad(&format!("unknown family '{other}'"))),
        };
        p.validated().map_err(|e| bad(&e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_prints() {
        for s in ["mollified:eps=1e-2", "singular:eps=1e-2,s=0.5", "truncated:eps=1e-2,s=0.5,n=12"] {
            let p: ForcingProfile = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
            assert_eq!(p.to_string().parse::<ForcingProfile>().unwrap(), p);
        }
        assert!("singular:eps=1e-2".parse::<ForcingProfile>().is_err());
        assert!("mollified:eps=-1".parse::<ForcingProfile>().is_err());
        assert!("cubic:eps=1".parse::<ForcingProfile>().is_err());
        assert!("singular:eps=0.1,s=1.0".parse::<ForcingProfile>().is_err());
    }

    #[test]
    fn mollified_values() {
        let p = ForcingProfile::mollified(0.02).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
        assert!((p.eval(0.02).unwrap() + 1.0).abs() < 1e-15);
        assert!((p.eval(-0.02).unwrap() - 1.0).abs() < 1e-15);
        assert!((p.eval(0.5).unwrap() + 1.0).abs() < 1e-15);
        assert!((p.eval_derivative(0.0).unwrap() + 15.0 / (8.0 * 0.02)).abs() < 1e-12);
    }

    #[test]
    fn singular_values() {
        let p = ForcingProfile::singular(0.01, 0.5).unwrap();
        assert!(matches!(p.eval(0.0), Err(Error::Domain(_))));
        assert!((p.eval(0.0025).unwrap() + 2.0).abs() < 1e-14);
        assert!((p.eval(-0.0025).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(p.eval(0.3).unwrap(), -1.0);
        assert!(p.eval_derivative(0.1).is_err());
    }

    #[test]
    fn truncated_is_bounded_and_continuous() {
        let p = ForcingProfile::truncated(0.01, 0.5, 12).unwrap();
        let cut = 0.01 / 4096.0;
        assert_eq!(p.eval(cut * 0.5).unwrap(), -64.0);
        assert!((p.eval(cut).unwrap() + 64.0).abs() < 1e-9);
        assert_eq!(p.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn floor_clamps_small_values() {
        use crate::grid::Grid;
        let g = Grid::new(16).unwrap();
        let p = ForcingProfile::singular(0.01, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| 1e-30 * x.signum() * y.signum() * (x != 0.0 && y != 0.0) as i32 as f64);
        let out = p.apply(&f, p.default_floor()).unwrap();
        assert!((out.norm_c0() - 4096.0).abs() < 1e-6);
        let z = ScalarField::zeros(g);
        assert!(p.apply(&z, 0.0).is_err());
        assert_eq!(p.apply(&z, 1e-9).unwrap().norm_c0(), 0.0);
    }

    fn any_profile() -> impl Strategy<Value = ForcingProfile> {
        prop_oneof![
            (1e-4f64..0.1).prop_map(|e| ForcingProfile::MollifiedSign { epsilon: e }),
            (1e-4f64..0.1, 0.05f64..0.95).prop_map(|(e, s)| ForcingProfile::Singular { epsilon: e, s }),
            (1e-4f64..0.1, 0.05f64..0.95, 1u32..24).prop_map(|(e, s, n)| ForcingProfile::Truncated {
                epsilon: e,
                s,
                levels: n
            }),
        ]
    }

    proptest! {
        #[test]
        fn every_family_is_odd(p in any_profile(), x in 1e-9f64..0.5) {
            prop_assert_eq!(p.eval(-x).unwrap(), -p.eval(x).unwrap());
        }

        #[test]
        fn equals_minus_one_past_epsilon(p in any_profile(), t in 1.0f64..50.0) {
            let x = (t * p.epsilon()).min(0.5).max(p.epsilon());
            prop_assert_eq!(p.eval(x).unwrap(), -1.0);
        }

        #[test]
        fn mollified_non_increasing(e in 1e-4f64..0.1, a in -0.2f64..0.2, d in 0.0f64..0.1) {
            let p = ForcingProfile::MollifiedSign { epsilon: e };
            prop_assert!(p.eval(a + d).unwrap() <= p.eval(a).unwrap());
            prop_assert!(p.eval(a).unwrap().abs() <= 1.0);
        }

        #[test]
        fn singular_families_rise_on_the_half_line(p in any_profile(), a in 1e-9f64..0.2, d in 0.0f64..0.1) {
            prop_assume!(!matches!(p, ForcingProfile::MollifiedSign { .. }));
            prop_assert!(p.eval(a + d).unwrap() >= p.eval(a).unwrap());
            prop_assert!(p.eval(a).unwrap() <= -1.0);
        }

        #[test]
        fn truncated_respects_bound(e in 1e-4f64..0.1, s in 0.05f64..0.95, n in 1u32..24, x in -0.5f64..0.5) {
            let p = ForcingProfile::Truncated { epsilon: e, s, levels: n };
            prop_assert!(p.eval(x).unwrap().abs() <= p.bound().unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn mollified_derivative_matches_difference(e in 1e-3f64..0.1, t in -0.99f64..0.99) {
            let p = ForcingProfile::MollifiedSign { epsilon: e };
            let x = t * e;
            let h = 1e-6 * e;
            let fd = (p.eval(x + h).unwrap() - p.eval(x - h).unwrap()) / (2.0 * h);
            let d = p.eval_derivative(x).unwrap();
            prop_assert!((fd - d).abs() <= 1e-5 * (1.0 / e));
        }
    }
}
