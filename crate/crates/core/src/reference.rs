//! The checkerboard stream function `psi_0 = Lap^{-1}[sgn x sgn y]` and the
//! grid checks of its structural properties and level-set estimates.

use serde::Serialize;

use crate::grid::{Grid, ScalarField};
use crate::spectral::{interp_column, SpectralWorkspace};

/// Height of the segment `M` and of the thin strip in the key lemma.
pub const STRIP: f64 = 1.0 / 2000.0;
/// Width of the corner window for the `x y ln x` comparison.
pub const CORNER: f64 = 1.0 / 1000.0;

#[derive(Debug, Clone)]
pub struct ReferencePatch {
    pub psi0: ScalarField,
    pub u0: (ScalarField, ScalarField),
    pub epsilon1: f64,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignCheck {
    pub points: usize,
    pub violations: usize,
    pub witness: Option<Witness>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioInterval {
    pub window: f64,
    pub samples: usize,
    pub c_lo: f64,
    pub c_hi: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CornerBound {
    pub strip: f64,
    pub points: usize,
    pub c4: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KeyLemmaCheck {
    pub points_above_epsilon1: usize,
    pub violations: usize,
    pub witness: Option<Witness>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub n: usize,
    pub negativity: SignCheck,
    /// `psi_0 / (x y ln x)` on `0 < y < x < 1/1000`.
    pub log_ratio: RatioInterval,
    /// Same ratio on the wider window `x < 1/100`, for context.
    pub log_ratio_wide: RatioInterval,
    pub corner: CornerBound,
    pub epsilon1: f64,
    pub epsilon1_negative: bool,
    pub key_lemma: KeyLemmaCheck,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallErrorReport {
    pub b: f64,
    pub points: usize,
    pub x_max: f64,
    /// Smallest `c` with `{psi_0 < 2f} ⊆ {x < c B / (-ln B)}`.
    pub c_needed: f64,
    pub c: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub a: f64,
    pub points: usize,
    /// Smallest constant for which every point with `psi_0 > -A` lies in the
    /// union of the three regions of the level-set lemma.
    pub c_star: f64,
}

/// Indices `i` with `x_i` in the open interval `(lo, hi)`.
fn open_range(g: Grid, lo: f64, hi: f64) -> impl Iterator<Item = usize> {
    (0..g.n()).filter(move |&i| {
        let x = g.coord(i);
        x > lo && x < hi
    })
}

impl ReferencePatch {
    pub fn build(grid: Grid) -> Self {
        let mut ws = SpectralWorkspace::new(grid);
        Self::build_with(&mut ws)
    }

    pub fn build_with(ws: &mut SpectralWorkspace) -> Self {
        let grid = ws.grid();
        let sgn = |t: f64| if t > 0.0 { 1.0 } else { -1.0 };
        let omega = ScalarField::from_fn(grid, |x, y| sgn(x) * sgn(y)).project_symmetry();
        let psi0 = ws.inv_laplacian(&omega).project_symmetry();
        let u0 = ws.velocity(&psi0);
        let epsilon1 = epsilon1(&psi0);
        Self { psi0, u0, epsilon1 }
    }

    pub fn grid(&self) -> Grid {
        self.psi0.grid()
    }

    pub fn verify_properties(&self) -> PropertyReport {
        self.verify_in_windows(CORNER, STRIP)
    }

    /// Same checks with the corner and strip windows widened to hold at least
    /// a couple of grid lines, for coarse grids.
    pub fn verify_properties_coarse(&self) -> PropertyReport {
        let h = self.grid().h();
        self.verify_in_windows(CORNER.max(2.5 * h), STRIP.max(1.5 * h))
    }

    fn verify_in_windows(&self, corner_window: f64, strip: f64) -> PropertyReport {
        let g = self.grid();
        let psi = &self.psi0;

        let mut neg = SignCheck { points: 0, violations: 0, witness: None, pass: true };
        for i in open_range(g, 0.0, 0.5) {
            for j in open_range(g, 0.0, 0.5) {
                neg.points += 1;
                let v = psi.at(i, j);
                if !(v < 0.0) {
                    neg.violations += 1;
                    neg.witness.get_or_insert(Witness { x: g.coord(i), y: g.coord(j), value: v });
                }
            }
        }
        neg.pass = neg.violations == 0 && neg.points > 0;

        let log_ratio = self.log_ratio(corner_window);
        let log_ratio_wide = self.log_ratio(10.0 * corner_window);

        let mut corner = CornerBound { strip, points: 0, c4: 0.0, witness: None, pass: true };
        for i in open_range(g, 0.0, 0.5) {
            let x = g.coord(i);
            for j in open_range(g, 0.0, strip) {
                let y = g.coord(j);
                let v = psi.at(i, j);
                corner.points += 1;
                if v < 0.0 {
                    corner.c4 = corner.c4.max(x * y / -v);
                } else {
                    corner.pass = false;
                    corner.witness.get_or_insert(Witness { x, y, value: v });
                }
            }
        }
        // strict inequality psi_0 < -xy/c4
        corner.c4 *= 1.0 + 1e-12;
        corner.pass &= corner.points > 0 && corner.c4.is_finite();

        let key_lemma = self.key_lemma();
        let epsilon1_negative = self.epsilon1 < 0.0;
        let pass = neg.pass && log_ratio.pass && corner.pass && epsilon1_negative && key_lemma.pass;
        PropertyReport {
            n: g.n(),
            negativity: neg,
            log_ratio,
            log_ratio_wide,
            corner,
            epsilon1: self.epsilon1,
            epsilon1_negative,
            key_lemma,
            pass,
        }
    }

    fn log_ratio(&self, window: f64) -> RatioInterval {
        let g = self.grid();
        let (mut lo, mut hi, mut samples) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        for i in open_range(g, 0.0, window) {
            let x = g.coord(i);
            for j in open_range(g, 0.0, x) {
                let y = g.coord(j);
                let r = self.psi0.at(i, j) / (x * y * x.ln());
                lo = lo.min(r);
                hi = hi.max(r);
                samples += 1;
            }
        }
        RatioInterval {
            window,
            samples,
            c_lo: lo,
            c_hi: hi,
            pass: samples > 0 && lo > 0.0 && lo <= hi && hi.is_finite(),
        }
    }

    /// Every triangle point `0 < y < x < 1/4` with `psi_0 > epsilon_1` has `y < 1/2000`.
    pub fn key_lemma(&self) -> KeyLemmaCheck {
        let g = self.grid();
        let mut out = KeyLemmaCheck { points_above_epsilon1: 0, violations: 0, witness: None, pass: true };
        for i in open_range(g, 0.0, 0.25) {
            let x = g.coord(i);
            for j in open_range(g, 0.0, x) {
                let v = self.psi0.at(i, j);
                if v > self.epsilon1 {
                    out.points_above_epsilon1 += 1;
                    let y = g.coord(j);
                    if !(y < STRIP) {
                        out.violations += 1;
                        out.witness.get_or_insert(Witness { x, y, value: v });
                    }
                }
            }
        }
        out.pass = out.violations == 0;
        out
    }

    pub fn small_error(&self, f: &ScalarField, c: f64) -> SmallErrorReport {
        let g = self.grid();
        let b = f.sub(&self.psi0).expect("same grid").norm_c1();
        let mut x_max: f64 = 0.0;
        let mut points = 0;
        for i in open_range(g, 0.0, 0.5) {
            let x = g.coord(i);
            for j in open_range(g, 0.0, x) {
                if self.psi0.at(i, j) < 2.0 * f.at(i, j) {
                    points += 1;
                    x_max = x_max.max(x);
                }
            }
        }
        let scale = if b > 0.0 && b < 1.0 { b / -b.ln() } else { f64::NAN };
        let c_needed = if points == 0 { 0.0 } else { x_max / scale };
        SmallErrorReport { b, points, x_max, c_needed, c, contained: points == 0 || c_needed <= c }
    }

    pub fn level_set_inclusion(&self, a: f64) -> InclusionReport {
        let g = self.grid();
        let la = -a.ln();
        let mut c_star: f64 = 0.0;
        let mut points = 0;
        for i in open_range(g, 0.0, 0.25) {
            let x = g.coord(i);
            for j in open_range(g, 0.0, x) {
                if self.psi0.at(i, j) <= -a {
                    continue;
                }
                points += 1;
                let y = g.coord(j);
                if x < CORNER {
                    // inside {x < sqrt(A)/(C sqrt(-ln A))} for C < c1,
                    // inside {y < C A / (-x ln x)} for C > c2
                    let c1 = a.sqrt() / (x * la.sqrt());
                    let c2 = y * (-x * x.ln()) / a;
                    if c2 > c1 {
                        c_star = c_star.max(c2);
                    }
                } else {
                    c_star = c_star.max(x * y / a);
                }
            }
        }
        InclusionReport { a, points, c_star }
    }
}

/// Grid maximum of `psi_0(x, 1/2000)` over `1/2000 < x < 1/2`, with the value
/// at `y = 1/2000` obtained by exact trigonometric interpolation in `y`.
pub fn epsilon1(psi0: &ScalarField) -> f64 {
    let g = psi0.grid();
    open_range(g, STRIP, 0.5).map(|i| interp_column(psi0, i, STRIP)).fold(f64::NEG_INFINITY, f64::max)
}

/// Cell-count measure `h^2 #{0 < y < x < 1/4 : f > -A}`.
pub fn level_set_area(f: &ScalarField, a: f64) -> f64 {
    let g = f.grid();
    let mut count = 0usize;
    for i in open_range(g, 0.0, 0.25) {
        let x = g.coord(i);
        count += open_range(g, 0.0, x).filter(|&j| f.at(i, j) > -a).count();
    }
    count as f64 * g.h() * g.h()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(n: usize) -> ReferencePatch {
        ReferencePatch::build(Grid::new(n).unwrap())
    }

    #[test]
    fn psi0_is_symmetric_and_vanishes_on_axes() {
        let r = reference(64);
        assert!(r.psi0.symmetry_defect() < 1e-13);
        let g = r.grid();
        for j in 0..64 {
            assert_eq!(r.psi0.at(g.origin(), j), 0.0);
            assert_eq!(r.psi0.at(j, g.origin()), 0.0);
        }
    }

    #[test]
    fn velocity_axis_invariance() {
        let r = reference(64);
        let g = r.grid();
        for j in 0..64 {
            assert!(r.u0.0.at(g.origin(), j).abs() < 1e-14);
            assert!(r.u0.1.at(j, g.origin()).abs() < 1e-14);
        }
    }

    #[test]
    fn level_set_area_limits() {
        let r = reference(128);
        let full = level_set_area(&r.psi0, 1.0);
        // strict 0 < y < x drops the diagonal, so the count is 1/32 - O(h)
        assert!((full - 1.0 / 32.0).abs() < 0.5 / 128.0);
        assert_eq!(level_set_area(&r.psi0, 1e-300), 0.0);
    }

    #[test]
    fn shifted_reference_has_empty_small_error_set() {
        let r = reference(64);
        let b = 0.01;
        let f = r.psi0.map(|v| v - b);
        let rep = r.small_error(&f, 1.0);
        assert_eq!(rep.points, 0);
        assert!(rep.contained);
        let same = r.small_error(&r.psi0, 1.0);
        assert_eq!(same.points, 0);
    }
}
