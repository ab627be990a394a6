//! Damped Picard iteration for `psi = P Lap^{-1} F(psi)` in the odd-odd-diagonal
//! class, continuation in `eps` and truncation level, the linearized gap and
//! the multi-start uniqueness check.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forcing::ForcingProfile;
use crate::grid::{Grid, ScalarField};
use crate::reference::ReferencePatch;
use crate::spectral::SpectralWorkspace;

const MIN_DAMPING: f64 = 1.0 / 64.0;
const GAP_MAX_ITER: usize = 10_000;
const GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum InitialGuess {
    Reference,
    Field(ScalarField),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub profile: ForcingProfile,
    pub damping: f64,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub initial_guess: InitialGuess,
    /// Clamp for the singular family; `None` uses `eps 2^-24`.
    pub floor: Option<f64>,
}

impl SolverConfig {
    pub fn new(profile: ForcingProfile) -> Self {
        Self {
            profile,
            damping: 1.0,
            max_iter: 500,
            tol_residual: 1e-10,
            initial_guess: InitialGuess::Reference,
            floor: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_residual = tol;
        self
    }

    pub fn with_guess(mut self, guess: InitialGuess) -> Self {
        self.initial_guess = guess;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validated()?;
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping {} not in (0, 1]", self.damping)));
        }
        if !(self.tol_residual >= 1e-12) || !self.tol_residual.is_finite() {
            return Err(Error::InvalidParameter(format!("tol_residual {} below 1e-12", self.tol_residual)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if let Some(f) = self.floor {
            if !(f >= 0.0) {
                return Err(Error::InvalidParameter(format!("floor {f} must be >= 0")));
            }
        }
        Ok(())
    }

    fn floor(&self) -> f64 {
        self.floor.unwrap_or_else(|| self.profile.default_floor())
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub profile: ForcingProfile,
    pub solution: ScalarField,
    pub residual_history: Vec<f64>,
    pub c1_distance_to_psi0: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_damping: f64,
    pub laplacian_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSummary {
    pub profile: String,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub final_damping: f64,
    pub c1_distance_to_psi0: f64,
    /// `c1_distance / sqrt(eps (-ln eps))`.
    pub ball_ratio: f64,
    pub laplacian_sup: f64,
    pub resolved: bool,
}

impl FixedPointReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn summary(&self) -> FixedPointSummary {
        let eps = self.profile.epsilon();
        FixedPointSummary {
            profile: self.profile.to_string(),
            n: self.solution.grid().n(),
            iterations: self.iterations,
            converged: self.converged,
            final_residual: self.final_residual(),
            final_damping: self.final_damping,
            c1_distance_to_psi0: self.c1_distance_to_psi0,
            ball_ratio: self.c1_distance_to_psi0 / ball_radius(eps),
            laplacian_sup: self.laplacian_sup,
            resolved: resolution_ok(self.solution.grid(), eps),
        }
    }
}

/// `sqrt(eps (-ln eps))`, the radius scale of the invariant C1 ball.
pub fn ball_radius(eps: f64) -> f64 {
    (eps * -eps.ln()).sqrt()
}

/// `h <= sqrt(eps) / (20 sqrt(-ln eps))`; vacuous for `eps >= 1`.
pub fn resolution_ok(grid: Grid, eps: f64) -> bool {
    eps >= 1.0 || grid.h() <= eps.sqrt() / (20.0 * (-eps.ln()).sqrt())
}

/// Smallest power of two satisfying the resolution rule (at least 64).
pub fn resolved_n(eps: f64) -> usize {
    let mut n = 64;
    while !resolution_ok(Grid::new(n).unwrap(), eps) {
        n *= 2;
    }
    n
}

/// Keeps `t` outside `psi_0`: `min` where `psi_0 < 0`, `max` where `psi_0 > 0`.
fn enclose(t: &mut [f64], psi0: &[f64]) {
    for (v, &r) in t.iter_mut().zip(psi0) {
        if r < 0.0 {
            *v = v.min(r);
        } else if r > 0.0 {
            *v = v.max(r);
        }
    }
}

pub fn solve(config: &SolverConfig, reference: &ReferencePatch) -> Result<FixedPointReport> {
    if matches!(config.profile, ForcingProfile::Singular { .. }) {
        return Err(Error::InvalidParameter(
            "the singular family is reached through truncation continuation (solve_singular)".into(),
        ));
    }
    let mut ws = SpectralWorkspace::new(reference.grid());
    solve_inner(config, reference, &mut ws)
}

fn solve_inner(
    config: &SolverConfig,
    reference: &ReferencePatch,
    ws: &mut SpectralWorkspace,
) -> Result<FixedPointReport> {
    config.validate()?;
    let grid = reference.grid();
    let psi0 = reference.psi0.values();
    let mut psi = match &config.initial_guess {
        InitialGuess::Reference => reference.psi0.clone(),
        InitialGuess::Field(f) => {
            f.check_same_grid(&reference.psi0)?;
            f.project_symmetry()
        }
    };
    let floor = config.floor();
    let encloses = config.profile.encloses_reference();
    let mut damping = config.damping;
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut forcing = Vec::with_capacity(grid.len());
    let mut tv = vec![0.0; grid.len()];
    let mut diff = vec![0.0; grid.len()];
    let mut converged = false;
    let mut solution = None;

    for k in 0..config.max_iter {
        config.profile.apply_into(&psi, floor, &mut forcing)?;
        ws.inv_laplacian_into(&forcing, &mut tv);
        let mut t = ScalarField::from_values(grid, std::mem::take(&mut tv))?.project_symmetry();
        if encloses {
            enclose(t.values_mut(), psi0);
        }
        for ((d, a), b) in diff.iter_mut().zip(t.values()).zip(psi.values()) {
            *d = a - b;
        }
        let r = ws.norm_c1_slice(&diff);
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("residual at iteration {k}")));
        }
        history.push(r);
        if r <= config.tol_residual {
            converged = true;
            solution = Some(t);
            break;
        }
        if r > 10.0 * best {
            return Err(Error::Diverged { iteration: k, residual: r });
        }
        best = best.min(r);
        if k >= 5 && r > history[k - 1] && damping > MIN_DAMPING {
            damping = (0.5 * damping).max(MIN_DAMPING);
        }
        for (p, d) in psi.values_mut().iter_mut().zip(&diff) {
            *p += damping * d;
        }
        tv = t.into_values();
    }

    let solution = solution.unwrap_or(psi);
    let c1_distance_to_psi0 =
        ws.norm_c1_slice(&solution.values().iter().zip(psi0).map(|(a, b)| a - b).collect::<Vec<_>>());
    let laplacian_sup = ws.laplacian(&solution).norm_c0();
    Ok(FixedPointReport {
        profile: config.profile,
        iterations: history.len(),
        residual_history: history,
        c1_distance_to_psi0,
        converged,
        final_damping: damping,
        laplacian_sup,
        solution,
    })
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub reports: Vec<FixedPointReport>,
    /// Why the sweep stopped early, if it did.
    pub halted: Option<String>,
}

impl SweepResult {
    pub fn complete(&self) -> bool {
        self.halted.is_none()
    }

    pub fn last(&self) -> Option<&FixedPointReport> {
        self.reports.last()
    }
}

fn check_order(steps: &[ForcingProfile]) -> Result<()> {
    use ForcingProfile::*;
    for w in steps.windows(2) {
        let ok = match (w[0], w[1]) {
            (MollifiedSign { epsilon: a }, MollifiedSign { epsilon: b }) => b < a,
            (Truncated { epsilon: a, s: s1, levels: n1 }, Truncated { epsilon: b, s: s2, levels: n2 }) => {
                s1 == s2 && ((a == b && n2 > n1) || b < a)
            }
            (Truncated { epsilon: a, s: s1, .. }, Singular { epsilon: b, s: s2 }) => s1 == s2 && b <= a,
            (Singular { epsilon: a, s: s1 }, Truncated { epsilon: b, s: s2, .. }) => s1 == s2 && b < a,
            (Singular { epsilon: a, s: s1 }, Singular { epsilon: b, s: s2 }) => s1 == s2 && b < a,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "continuation step {} -> {} is not a warm-startable order",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Solves each step warm-started from the previous solution. Steps must run
/// toward smaller `eps` or deeper truncation. A non-converged step halts the
/// sweep and is kept as the last report. A step that collapsed to the trivial
/// state hands the base guess to the next one.
pub fn continuation_sweep(
    steps: &[ForcingProfile],
    base: &SolverConfig,
    reference: &ReferencePatch,
) -> Result<SweepResult> {
    check_order(steps)?;
    let mut ws = SpectralWorkspace::new(reference.grid());
    let mut reports: Vec<FixedPointReport> = Vec::new();
    let mut guess = base.initial_guess.clone();
    for &profile in steps {
        let mut cfg = base.clone();
        cfg.profile = profile;
        cfg.initial_guess = guess.clone();
        match solve_inner(&cfg, reference, &mut ws) {
            Ok(rep) => {
                let ok = rep.converged;
                // zero is a fixed point of every family; never continue from it
                let collapsed = rep.solution.norm_c0() < 1e-6 * reference.psi0.norm_c0();
                guess = if collapsed { base.initial_guess.clone() } else { InitialGuess::Field(rep.solution.clone()) };
                reports.push(rep);
                if !ok {
                    return Ok(SweepResult { reports, halted: Some(format!("{profile} did not converge")) });
                }
            }
            Err(e) => {
                return Ok(SweepResult { reports, halted: Some(format!("{profile}: {e}")) });
            }
        }
    }
    Ok(SweepResult { reports, halted: None })
}

/// Truncation chain `levels` followed by the floored singular map at the
/// same `eps`.
pub fn singular_chain(profile: ForcingProfile, levels: &[u32]) -> Result<Vec<ForcingProfile>> {
    let ForcingProfile::Singular { epsilon, s } = profile else {
        return Err(Error::InvalidParameter(format!("{profile} is not singular")));
    };
    let mut steps = levels.iter().map(|&n| ForcingProfile::truncated(epsilon, s, n)).collect::<Result<Vec<_>>>()?;
    steps.push(profile);
    Ok(steps)
}

pub const DEFAULT_LEVELS: [u32; 4] = [4, 8, 12, 16];

pub fn solve_singular(
    profile: ForcingProfile,
    levels: &[u32],
    base: &SolverConfig,
    reference: &ReferencePatch,
) -> Result<SweepResult> {
    continuation_sweep(&singular_chain(profile, levels)?, base, reference)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub mu: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of `v -> (-Lap)^{-1}(|F'(psi)| v)` on the symmetric
/// subspace, by power iteration in the `H^1` inner product.
pub fn linearized_gap(psi: &ScalarField, profile: &ForcingProfile) -> Result<GapReport> {
    let start = ScalarField::from_fn(psi.grid(), |x, y| {
        (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).sin()
    });
    linearized_gap_from(psi, profile, &start)
}

pub fn linearized_gap_from(psi: &ScalarField, profile: &ForcingProfile, start: &ScalarField) -> Result<GapReport> {
    let grid = psi.grid();
    start.check_same_grid(psi)?;
    let weight: Vec<f64> =
        psi.values().iter().map(|&v| profile.eval_derivative(v).map(f64::abs)).collect::<Result<_>>()?;
    if weight.iter().all(|&w| w == 0.0) {
        return Ok(GapReport { mu: 0.0, iterations: 0 });
    }
    let h2 = grid.h() * grid.h();
    let mut ws = SpectralWorkspace::new(grid);
    let mut v = start.project_symmetry().into_values();
    let e = ws.dirichlet_slice(&v);
    if !(e > 0.0) {
        return Err(Error::InvalidParameter("start vector has no symmetric component".into()));
    }
    v.iter_mut().for_each(|x| *x /= e.sqrt());
    let mut wv = vec![0.0; grid.len()];
    let mut av = vec![0.0; grid.len()];
    let mut mu_prev = f64::NAN;
    for it in 1..=GAP_MAX_ITER {
        for ((o, &a), &b) in wv.iter_mut().zip(&v).zip(&weight) {
            *o = a * b;
        }
        // v has unit Dirichlet energy
        let mu = h2 * wv.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        ws.inv_laplacian_into(&wv, &mut av);
        let a = ScalarField::from_values(grid, av.iter().map(|x| -x).collect())?.project_symmetry();
        let e = ws.dirichlet_slice(a.values());
        if !(e > 0.0) {
            return Ok(GapReport { mu: 0.0, iterations: it });
        }
        v = a.into_values();
        v.iter_mut().for_each(|x| *x /= e.sqrt());
        if (mu - mu_prev).abs() <= GAP_TOL * mu.abs().max(1e-300) {
            return Ok(GapReport { mu, iterations: it });
        }
        mu_prev = mu;
    }
    Err(Error::Stagnation(GAP_MAX_ITER))
}

/// `psi_0` plus a smooth symmetric perturbation of prescribed C1 norm.
pub fn perturbed_reference(reference: &ReferencePatch, c1_amplitude: f64, seed: u64) -> ScalarField {
    let grid = reference.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = ScalarField::from_values(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .expect("finite noise");
    let mut ws = SpectralWorkspace::new(grid);
    let smooth = ws.low_pass(&noise, 8.0).project_symmetry();
    let norm = ws.norm_c1(&smooth);
    reference.psi0.add(&smooth.scaled(c1_amplitude / norm)).expect("same grid")
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub max_distance: f64,
    pub final_residuals: Vec<f64>,
}

/// Converges from every guess (in parallel) and returns the largest pairwise
/// C1 distance between the limits.
pub fn uniqueness_check(
    config: &SolverConfig,
    guesses: &[ScalarField],
    reference: &ReferencePatch,
) -> Result<UniquenessReport> {
    let sols: Vec<FixedPointReport> = guesses
        .par_iter()
        .map(|g| {
            let cfg = config.clone().with_guess(InitialGuess::Field(g.clone()));
            let rep = solve(&cfg, reference)?;
            if !rep.converged {
                return Err(Error::NotConverged { iterations: rep.iterations, residual: rep.final_residual() });
            }
            Ok(rep)
        })
        .collect::<Result<_>>()?;
    let mut ws = SpectralWorkspace::new(reference.grid());
    let mut max_distance: f64 = 0.0;
    for a in 0..sols.len() {
        for b in a + 1..sols.len() {
            let d = sols[a].solution.sub(&sols[b].solution)?;
            max_distance = max_distance.max(ws.norm_c1(&d));
        }
    }
    Ok(UniquenessReport { max_distance, final_residuals: sols.iter().map(|r| r.final_residual()).collect() })
}

/// `||F(phi)||_{L^p}` for a converged state.
pub fn forcing_lp(report: &FixedPointReport, p: f64) -> Result<f64> {
    let f = report.profile.apply(&report.solution, report.profile.default_floor())?;
    f.norm_lp(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(n: usize) -> ReferencePatch {
        ReferencePatch::build(Grid::new(n).unwrap())
    }

    #[test]
    fn rejects_bad_config() {
        let p = ForcingProfile::mollified(0.05).unwrap();
        let mut c = SolverConfig::new(p);
        c.damping = 0.0;
        assert!(c.validate().is_err());
        let c = SolverConfig::new(p).with_tol(1e-13);
        assert!(c.validate().is_err());
    }

    #[test]
    fn singular_needs_continuation() {
        let r = reference(32);
        let p = ForcingProfile::singular(0.05, 0.5).unwrap();
        assert!(solve(&SolverConfig::new(p), &r).is_err());
    }

    #[test]
    fn large_epsilon_contracts_to_zero() {
        let r = reference(64);
        let p = ForcingProfile::mollified(10.0).unwrap();
        let rep = solve(&SolverConfig::new(p), &r).unwrap();
        assert!(rep.converged);
        assert!(rep.solution.norm_c0() < 1e-10);
        assert!(rep.iterations < 20);
    }

    #[test]
    fn sweep_order_is_checked() {
        let r = reference(32);
        let steps = [ForcingProfile::mollified(0.01).unwrap(), ForcingProfile::mollified(0.02).unwrap()];
        assert!(continuation_sweep(&steps, &SolverConfig::new(steps[0]), &r).is_err());
    }

    #[test]
    fn gap_vanishes_in_flat_region() {
        let g = Grid::new(32).unwrap();
        let p = ForcingProfile::mollified(1e-3).unwrap();
        let flat = ScalarField::from_fn(g, |_, _| 1.0);
        assert_eq!(linearized_gap(&flat, &p).unwrap().mu, 0.0);
    }
}
