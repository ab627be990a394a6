//! Experiment configuration: a TOML file (flat `key = value` pairs grouped in
//! sections) that every CLI flag can override.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingProfile;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Reference,
    Solve,
    Sweep,
    Barrier,
    Trace,
    Rates,
    Selftest,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Reference => "reference",
            Self::Solve => "solve",
            Self::Sweep => "sweep",
            Self::Barrier => "barrier",
            Self::Trace => "trace",
            Self::Rates => "rates",
            Self::Selftest => "selftest",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    /// Single profile, e.g. `mollified:eps=1e-2`.
    pub spec: String,
    /// Family for sweeps and rate studies: `mollified`, `truncated` or `singular`.
    pub family: String,
    pub eps: Vec<f64>,
    pub s: f64,
    /// Truncation levels used for continuation toward the singular family.
    pub levels: Vec<u32>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            spec: "mollified:eps=2e-2".into(),
            family: "mollified".into(),
            eps: vec![0.08, 0.04, 0.02, 0.01],
            s: 0.5,
            levels: vec![4, 8, 12, 16],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// `reference` or a path to a field dump.
    pub guess: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tol: 1e-10, damping: 1.0, max_iter: 500, guess: "reference".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSection {
    pub s: f64,
    /// Epsilon for the comparison; 0 means none.
    pub eps: f64,
    /// Field dump of a converged singular state; empty means none.
    pub phi: String,
    pub m: usize,
}

impl Default for BarrierSection {
    fn default() -> Self {
        Self { s: 0.5, eps: 0.0, phi: String::new(), m: 2001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSection {
    pub field: String,
    /// `y0` for an axis trajectory, `x0,y0` for a 2D path.
    pub start: String,
    pub t_max: f64,
    pub rtol: f64,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self { field: String::new(), start: "0.1".into(), t_max: 10.0, rtol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub barrier: BarrierSection,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            grid: GridSection::default(),
            profile: ProfileSection::default(),
            solver: SolverSection::default(),
            barrier: BarrierSection::default(),
            trace: TraceSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn single_profile(&self) -> Result<ForcingProfile> {
        self.profile.spec.parse()
    }

    /// Profiles of a sweep, one per `eps`, in the given order.
    pub fn family_profiles(&self) -> Result<Vec<ForcingProfile>> {
        let p = &self.profile;
        p.eps
            .iter()
            .map(|&e| match p.family.as_str() {
                "mollified" => ForcingProfile::mollified(e),
                "singular" => ForcingProfile::singular(e, p.s),
                "truncated" => ForcingProfile::truncated(e, p.s, *p.levels.last().unwrap_or(&16)),
                other => Err(Error::Config(format!("unknown family '{other}'"))),
            })
            .collect::<Result<_>>()
            .map_err(as_config)
    }

    /// Checks every numeric field the command will use.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.command != Command::Barrier || !self.barrier.phi.is_empty() {
            self.grid()?;
        }
        let s = &self.solver;
        if !(s.tol >= 1e-12 && s.tol.is_finite()) {
            return bad(format!("solver.tol = {} must be >= 1e-12", s.tol));
        }
        if !(s.damping > 0.0 && s.damping <= 1.0) {
            return bad(format!("solver.damping = {} not in (0, 1]", s.damping));
        }
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed = {} exceeds {}", self.seed, i64::MAX));
        }
        if s.max_iter == 0 {
            return bad("solver.max_iter must be positive".into());
        }
        match self.command {
            Command::Solve => {
                self.single_profile().map_err(as_config)?;
            }
            Command::Sweep | Command::Rates => {
                let ps = self.family_profiles()?;
                if ps.is_empty() {
                    return bad("profile.eps is empty".into());
                }
                if self.command == Command::Rates && ps.len() < 4 {
                    return bad(format!("rate fits need at least 4 eps values, got {}", ps.len()));
                }
                if self.profile.family != "mollified" && self.profile.levels.is_empty() {
                    return bad("profile.levels is empty".into());
                }
            }
            Command::Barrier => {
                let b = &self.barrier;
                if !(b.s > 0.0 && b.s < 1.0) {
                    return bad(format!("barrier.s = {} not in (0, 1)", b.s));
                }
                if b.m < 5 || b.m.is_multiple_of(2) {
                    return bad(format!("barrier.m = {} must be odd and >= 5", b.m));
                }
                if b.eps < 0.0 || (!b.phi.is_empty() && !(b.eps > 0.0)) {
                    return bad("barrier.eps must be positive when phi is given".into());
                }
            }
            Command::Trace => {
                let t = &self.trace;
                if t.field.is_empty() {
                    return bad("trace.field is required".into());
                }
                self.trace_start()?;
                if !(t.rtol >= 1e-12) {
                    return bad(format!("trace.rtol = {} below 1e-12", t.rtol));
                }
                if !(t.t_max > 0.0) {
                    return bad(format!("trace.t_max = {} must be positive", t.t_max));
                }
            }
            Command::Reference | Command::Selftest => {}
        }
        Ok(())
    }

    pub fn trace_start(&self) -> Result<TraceStart> {
        let parts: Vec<&str> = self.trace.start.split(',').map(str::trim).collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Config(format!("bad start '{}'", self.trace.start)));
        match parts.as_slice() {
            [y] => {
                let y0 = num(y)?;
                if !(y0 > 0.0 && y0 < 0.5) {
                    return Err(Error::Config(format!("axis start y0 = {y0} not in (0, 1/2)")));
                }
                Ok(TraceStart::Axis(y0))
            }
            [x, y] => Ok(TraceStart::Point(num(x)?, num(y)?)),
            _ => Err(Error::Config(format!("bad start '{}'", self.trace.start))),
        }
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceStart {
    Axis(f64),
    Point(f64, f64),
}
