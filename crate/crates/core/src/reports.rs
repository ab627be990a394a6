//! Rate fits, content hashing, report writers and the per-command runners
//! that the CLI and the examples share.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::barrier::{self, comparison_check, reconstruct_k, solve_b0};
use crate::config::{Command, ExperimentConfig, TraceStart};
use crate::error::{Error, Result};
use crate::forcing::ForcingProfile;
use crate::grid::ScalarField;
use crate::reference::{level_set_area, ReferencePatch};
use crate::selftest::run_selftest;
use crate::solver::{
    continuation_sweep, linearized_gap, solve_singular, FixedPointReport, InitialGuess, SolverConfig, SweepResult,
};
use crate::trajectory::{axis_profile, integrate_axis, trace_2d, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidParameter(format!("line fit needs >= 2 matching points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("line fit input".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("line fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit { slope, intercept, r2 })
}

pub const MOLLIFIED_PREDICTOR: &str = "sqrt(eps*(-ln eps))";
pub const SINGULAR_PREDICTOR: &str = "eps^(s/2)";

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub predictor: String,
    /// `(eps, predictor(eps), ||psi_eps - psi_0||_C1)`.
    pub samples: Vec<(f64, f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Log-log fit of the C1 distance against the family's predictor, over the
/// converged states of a sweep (for singular chains, the singular states only).
pub fn fit_rate(reports: &[FixedPointReport]) -> Result<RateFit> {
    let points: Vec<&FixedPointReport> =
        reports.iter().filter(|r| r.converged && !matches!(r.profile, ForcingProfile::Truncated { .. })).collect();
    let points = if points.is_empty() { reports.iter().filter(|r| r.converged).collect() } else { points };
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least 4 converged states, got {}",
            points.len()
        )));
    }
    let predictor_name = match points[0].profile {
        ForcingProfile::MollifiedSign { .. } => MOLLIFIED_PREDICTOR,
        _ => SINGULAR_PREDICTOR,
    };
    let samples: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|r| {
            let e = r.profile.epsilon();
            let p = match r.profile.exponent() {
                None => (e * -e.ln()).sqrt(),
                Some(s) => e.powf(0.5 * s),
            };
            (e, p, r.c1_distance_to_psi0)
        })
        .collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.2.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(RateFit { predictor: predictor_name.into(), samples, slope: fit.slope, intercept: fit.intercept, r2: fit.r2 })
}

/// Git-style blob hash: SHA-256 of `"blob <len>\0" + bytes`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn field_hash(f: &ScalarField) -> String {
    content_hash(&f.to_dump_bytes())
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_table(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let fe = |e: csv::Error| Error::Format(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(fe)?;
    w.write_record(header).map_err(fe)?;
    for r in rows {
        w.write_record(r).map_err(fe)?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata wrapped around every JSON result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub config: &'a ExperimentConfig,
    pub grid_n: Option<usize>,
    /// Content hashes of the input fields, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub pass: bool,
    pub result: T,
}

#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

struct Output<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    files: Vec<PathBuf>,
    inputs: BTreeMap<String, String>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let dir = PathBuf::from(&cfg.output.dir);
        fs::create_dir_all(&dir)?;
        Ok(Self { cfg, dir, files: Vec::new(), inputs: BTreeMap::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn input(&mut self, role: &str, f: &ScalarField) {
        self.inputs.insert(role.into(), field_hash(f));
    }

    fn field(&mut self, name: &str, f: &ScalarField) -> Result<()> {
        let p = self.path(name);
        f.write_dump(p)
    }

    fn json<T: Serialize>(&mut self, name: &str, grid_n: Option<usize>, pass: bool, result: T) -> Result<Value> {
        let env = Envelope {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.cfg.command,
            config: self.cfg,
            grid_n,
            inputs: self.inputs.clone(),
            pass,
            result,
        };
        let p = self.path(name);
        write_json(&p, &env)?;
        serde_json::to_value(&env.result).map_err(|e| Error::Format(e.to_string()))
    }

    fn finish(self, pass: bool, summary: Value) -> CommandOutcome {
        CommandOutcome { pass, files: self.files, summary }
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

/// Validates the configuration and runs its command.
pub fn run_command(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    match cfg.command {
        Command::Reference => run_reference(cfg),
        Command::Solve => run_solve(cfg),
        Command::Sweep => run_sweep(cfg),
        Command::Barrier => run_barrier(cfg),
        Command::Trace => run_trace(cfg),
        Command::Rates => run_rates(cfg),
        Command::Selftest => run_selftest_command(cfg),
    }
}

pub const LEVEL_SET_A: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn run_reference(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let grid = cfg.grid()?;
    let mut out = Output::new(cfg)?;
    let r = ReferencePatch::build(grid);
    out.field("psi0.field", &r.psi0)?;
    // the fixed windows hold no grid line until h < 1/2000
    let strict = grid.h() < crate::reference::STRIP;
    let props = if strict { r.verify_properties() } else { r.verify_properties_coarse() };
    let inclusion: Vec<_> = LEVEL_SET_A.iter().map(|&a| r.level_set_inclusion(a)).collect();
    let rows: Vec<Vec<String>> = LEVEL_SET_A
        .iter()
        .map(|&a| {
            let area = level_set_area(&r.psi0, a);
            let law = -a * a.ln();
            vec![num(a), num(area), num(law), num(area / law)]
        })
        .collect();
    let p = out.path("level_set_area.csv");
    write_table(p, &["A", "area", "minus_A_ln_A", "ratio"], &rows)?;
    let pass = props.pass;
    let windows = if strict { "fixed" } else { "widened" };
    let result =
        json!({ "psi0_hash": field_hash(&r.psi0), "windows": windows, "properties": props, "inclusion": inclusion });
    let summary = out.json("properties.json", Some(grid.n()), pass, result)?;
    Ok(out.finish(pass, summary))
}

fn base_solver(cfg: &ExperimentConfig, profile: ForcingProfile, reference: &ReferencePatch) -> Result<SolverConfig> {
    let mut sc = SolverConfig::new(profile).with_tol(cfg.solver.tol);
    sc.damping = cfg.solver.damping;
    sc.max_iter = cfg.solver.max_iter;
    if cfg.solver.guess != "reference" {
        let g = ScalarField::read_dump(&cfg.solver.guess)?;
        g.check_same_grid(&reference.psi0)?;
        sc.initial_guess = InitialGuess::Field(g);
    }
    sc.validate()?;
    Ok(sc)
}

#[derive(Serialize)]
struct StateRecord {
    summary: crate::solver::FixedPointSummary,
    gap_mu: Option<f64>,
    field_hash: String,
}

fn state_record(rep: &FixedPointReport) -> StateRecord {
    let gap_mu = match rep.profile {
        ForcingProfile::MollifiedSign { .. } if rep.converged => {
            linearized_gap(&rep.solution, &rep.profile).ok().map(|g| g.mu)
        }
        _ => None,
    };
    StateRecord { summary: rep.summary(), gap_mu, field_hash: field_hash(&rep.solution) }
}

fn run_solve(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let grid = cfg.grid()?;
    let profile = cfg.single_profile()?;
    let mut out = Output::new(cfg)?;
    let r = ReferencePatch::build(grid);
    let sc = base_solver(cfg, profile, &r)?;
    if let InitialGuess::Field(g) = &sc.initial_guess {
        out.input("guess", g);
    }
    let (rep, chain) = match profile {
        ForcingProfile::Singular { .. } => {
            let sw = solve_singular(profile, &cfg.profile.levels, &sc, &r)?;
            let chain: Vec<String> = sw.reports.iter().map(|r| r.profile.to_string()).collect();
            let last = sw.reports.into_iter().last().ok_or_else(|| Error::Consistency("empty chain".into()))?;
            (last, chain)
        }
        _ => (crate::solver::solve(&sc, &r)?, vec![profile.to_string()]),
    };
    out.field("solution.field", &rep.solution)?;
    let rows: Vec<Vec<String>> =
        rep.residual_history.iter().enumerate().map(|(k, v)| vec![(k + 1).to_string(), num(*v)]).collect();
    let p = out.path("convergence.csv");
    write_table(p, &["iteration", "residual"], &rows)?;
    let rec = state_record(&rep);
    let pass = rep.converged && rep.profile == profile;
    let result = json!({ "state": rec, "chain": chain, "residual_history": rep.residual_history });
    let summary = out.json("report.json", Some(grid.n()), pass, result)?;
    Ok(out.finish(pass, summary))
}

/// The continuation steps of a family sweep and the indices of its states.
fn family_steps(cfg: &ExperimentConfig) -> Result<Vec<ForcingProfile>> {
    let mut eps = cfg.profile.eps.clone();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eps.dedup();
    let s = cfg.profile.s;
    let mut steps = Vec::new();
    for e in eps {
        match cfg.profile.family.as_str() {
            "mollified" => steps.push(ForcingProfile::mollified(e)?),
            "truncated" => {
                let top = *cfg.profile.levels.iter().max().unwrap_or(&16);
                steps.push(ForcingProfile::truncated(e, s, top)?);
            }
            "singular" => {
                for &n in &cfg.profile.levels {
                    steps.push(ForcingProfile::truncated(e, s, n)?);
                }
                steps.push(ForcingProfile::singular(e, s)?);
            }
            other => return Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
    Ok(steps)
}

fn sweep_rows(sw: &SweepResult) -> Vec<Vec<String>> {
    sw.reports
        .iter()
        .map(|r| {
            let s = r.summary();
            vec![
                s.profile,
                num(r.profile.epsilon()),
                s.iterations.to_string(),
                s.converged.to_string(),
                num(s.final_residual),
                num(s.c1_distance_to_psi0),
                num(s.ball_ratio),
                num(s.laplacian_sup),
            ]
        })
        .collect()
}

const SWEEP_HEADER: [&str; 8] =
    ["profile", "eps", "iterations", "converged", "final_residual", "c1_distance", "ball_ratio", "laplacian_sup"];

fn execute_sweep(cfg: &ExperimentConfig, out: &mut Output) -> Result<(SweepResult, Vec<StateRecord>)> {
    let grid = cfg.grid()?;
    let r = ReferencePatch::build(grid);
    let steps = family_steps(cfg)?;
    let sc = base_solver(cfg, steps[0], &r)?;
    if let InitialGuess::Field(g) = &sc.initial_guess {
        out.input("guess", g);
    }
    let sw = continuation_sweep(&steps, &sc, &r)?;
    let mut states = Vec::new();
    for (k, rep) in sw.reports.iter().enumerate() {
        if matches!(rep.profile, ForcingProfile::Truncated { .. }) && cfg.profile.family == "singular" {
            continue;
        }
        out.field(&format!("state_{k:02}.field"), &rep.solution)?;
        states.push(state_record(rep));
    }
    let p = out.path("sweep.csv");
    write_table(p, &SWEEP_HEADER, &sweep_rows(&sw))?;
    Ok((sw, states))
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let mut out = Output::new(cfg)?;
    let (sw, states) = execute_sweep(cfg, &mut out)?;
    let pass = sw.complete() && sw.reports.iter().all(|r| r.converged);
    let result = json!({ "halted": sw.halted, "states": states });
    let summary = out.json("sweep.json", Some(cfg.grid.n), pass, result)?;
    Ok(out.finish(pass, summary))
}

/// Slope band for the rate assertion of each family.
pub fn rate_band(predictor: &str) -> (f64, f64) {
    if predictor == MOLLIFIED_PREDICTOR {
        (0.8, 1.2)
    } else {
        (0.7, 1.3)
    }
}

pub fn run_rates(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let mut out = Output::new(cfg)?;
    let (sw, states) = execute_sweep(cfg, &mut out)?;
    let fit = fit_rate(&sw.reports)?;
    let rows: Vec<Vec<String>> = fit.samples.iter().map(|&(e, p, d)| vec![num(e), num(p), num(d)]).collect();
    let p = out.path("rates.csv");
    write_table(p, &["eps", "predictor", "c1_distance"], &rows)?;
    let (lo, hi) = rate_band(&fit.predictor);
    let slope_ok = fit.slope >= lo && fit.slope <= hi;
    let pass = sw.complete() && slope_ok;
    let result =
        json!({ "fit": fit, "band": [lo, hi], "slope_in_band": slope_ok, "halted": sw.halted, "states": states });
    let summary = out.json("rates.json", Some(cfg.grid.n), pass, result)?;
    Ok(out.finish(pass, summary))
}

pub const I_INF_B: f64 = 1e6;

fn run_barrier(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let b = &cfg.barrier;
    let mut out = Output::new(cfg)?;
    let roots = barrier::b0_roots(b.s)?;
    let b0 = solve_b0(b.s)?;
    let sol = reconstruct_k(b.s, b0, b.m)?;
    sol.write_csv(out.path("K.csv"))?;
    let inv = sol.invariants();
    let ode = sol.ode_cross_check()?;
    let i_b0 = barrier::shooting_integral(b.s, b0)?;
    let i_inf = barrier::shooting_integral(b.s, I_INF_B)?;
    let i_inf_err = (i_inf - (1.0 + b.s) * std::f64::consts::FRAC_PI_4).abs();
    let shooting_err = (i_b0 - std::f64::consts::FRAC_PI_4).abs();
    let mut pass = shooting_err <= 1e-9
        && ode.first_integral_drift <= 1e-7
        && inv.positive
        && inv.sin_ratio.0 > 0.0
        && i_inf_err < 1e-3;
    let mut grid_n = None;
    let comparison = if !b.phi.is_empty() {
        let phi = ScalarField::read_dump(&b.phi)?;
        out.input("phi", &phi);
        grid_n = Some(phi.grid().n());
        let rep = comparison_check(&phi, &sol, b.eps);
        pass &= rep.pass;
        Some(rep)
    } else {
        None
    };
    let result = json!({
        "s": b.s,
        "b0": b0,
        "roots": roots,
        "shooting_error": shooting_err,
        "kprime0": sol.kprime0,
        "radius_factor": sol.radius_factor(),
        "invariants": inv,
        "ode_cross_check": ode,
        "i_inf": { "b": I_INF_B, "value": i_inf, "limit_error": i_inf_err },
        "comparison": comparison,
    });
    let summary = out.json("barrier.json", grid_n, pass, result)?;
    Ok(out.finish(pass, summary))
}

/// Axis profile window used by `trace`.
pub const AXIS_Y_MAX: f64 = 0.45;
pub const AXIS_SAMPLES: usize = 400;

fn run_trace(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let t = &cfg.trace;
    let psi = ScalarField::read_dump(&t.field)?;
    let mut out = Output::new(cfg)?;
    out.input("field", &psi);
    let n = psi.grid().n();
    match cfg.trace_start()? {
        TraceStart::Axis(y0) => {
            let prof = axis_profile(&psi, 4.0 * psi.grid().h(), AXIS_Y_MAX, AXIS_SAMPLES)?;
            let rec = integrate_axis(&prof, y0, t.t_max, t.rtol)?;
            rec.write_csv(out.path("trajectory.csv"))?;
            let pass = rec.diagnostic != Diagnostic::Inconclusive;
            let result = json!({
                "diagnostic": rec.diagnostic,
                "arrival_time": rec.arrival_time,
                "double_exp_fit": rec.double_exp_fit,
                "strictly_decreasing": rec.strictly_decreasing(),
                "tail": prof.tail,
                "fit_decade": prof.fit_decade,
                "fitted_exponent": prof.fitted_exponent,
                "fitted_constant": prof.fitted_constant,
                "fit_r2": prof.fit_r2,
                "log_constant": prof.log_constant,
                "power_rms": prof.power_rms,
                "log_rms": prof.log_rms,
                "nonnegative_samples": prof.nonnegative_samples,
            });
            let summary = out.json("diagnostic.json", Some(n), pass, result)?;
            Ok(out.finish(pass, summary))
        }
        TraceStart::Point(x0, y0) => {
            let path = trace_2d(&psi, (x0, y0), t.t_max, t.rtol)?;
            let rows: Vec<Vec<String>> =
                path.times.iter().zip(&path.points).map(|(&tt, &(x, y))| vec![num(tt), num(x), num(y)]).collect();
            let p = out.path("trajectory.csv");
            write_table(p, &["t", "x", "y"], &rows)?;
            let bound = 100.0 * t.rtol * path.grad_max.max(1.0);
            let pass = path.max_psi_drift <= bound;
            let result = json!({
                "psi_start": path.psi_start,
                "max_psi_drift": path.max_psi_drift,
                "drift_bound": bound,
                "length": path.length,
                "steps": path.times.len(),
            });
            let summary = out.json("diagnostic.json", Some(n), pass, result)?;
            Ok(out.finish(pass, summary))
        }
    }
}

fn run_selftest_command(cfg: &ExperimentConfig) -> Result<CommandOutcome> {
    let grid = cfg.grid()?;
    let mut out = Output::new(cfg)?;
    let rep = run_selftest(grid, cfg.seed);
    let pass = rep.pass;
    let summary = out.json("selftest.json", Some(grid.n()), pass, &rep)?;
    Ok(out.finish(pass, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn blob_hash_matches_git_convention() {
        // `git hash-object --object-format=sha256` of an empty file
        assert_eq!(content_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn rate_fit_rejects_short_sweeps() {
        assert!(fit_rate(&[]).is_err());
    }
}
