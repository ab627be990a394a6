use std::path::PathBuf;
use std::process::ExitCode;

use bcpatch::config::{Command, ExperimentConfig};
use bcpatch::reports::run_command;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bcpatch", version, about = "Steady Euler states near the checkerboard vortex patch")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct SolverFlags {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// `reference` or a field dump path
    #[arg(long)]
    guess: Option<String>,
}

#[derive(Args, Clone, Default)]
struct FamilyFlags {
    /// mollified, truncated or singular
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build psi_0, check its properties and level-set areas
    Reference {
        #[command(flatten)]
        common: Common,
    },
    /// Solve one fixed-point problem
    Solve {
        #[command(flatten)]
        common: Common,
        /// e.g. `mollified:eps=1e-2` or `singular:eps=2e-2,s=0.5`
        #[arg(long)]
        profile: Option<String>,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
    },
    /// Continuation sweep over a family
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: FamilyFlags,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Barrier profile, diagnostics and optional comparison
    Barrier {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Particle trajectory on the axis or in the plane
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        field: Option<String>,
        /// `y0` or `x0,y0`
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        rtol: Option<f64>,
    },
    /// Sweep plus log-log rate fit
    Rates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: FamilyFlags,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Structural self-checks
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn base(command: Command, common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let mut c = ExperimentConfig::load(p)?;
            c.command = command;
            c
        }
        None => ExperimentConfig::new(command),
    };
    set(&mut cfg.grid.n, common.grid);
    set(&mut cfg.output.dir, common.out.clone());
    set(&mut cfg.seed, common.seed);
    Ok(cfg)
}

fn apply_solver(cfg: &mut ExperimentConfig, f: SolverFlags) {
    set(&mut cfg.solver.tol, f.tol);
    set(&mut cfg.solver.damping, f.damping);
    set(&mut cfg.solver.max_iter, f.max_iter);
    set(&mut cfg.solver.guess, f.guess);
}

fn apply_family(cfg: &mut ExperimentConfig, f: FamilyFlags) {
    set(&mut cfg.profile.family, f.family);
    set(&mut cfg.profile.eps, f.eps);
    set(&mut cfg.profile.s, f.s);
    set(&mut cfg.profile.levels, f.levels);
}

fn build_config(cmd: Cmd) -> anyhow::Result<ExperimentConfig> {
    Ok(match cmd {
        Cmd::Reference { common } => base(Command::Reference, &common)?,
        Cmd::Selftest { common } => base(Command::Selftest, &common)?,
        Cmd::Solve { common, profile, solver, levels } => {
            let mut c = base(Command::Solve, &common)?;
            set(&mut c.profile.spec, profile);
            set(&mut c.profile.levels, levels);
            apply_solver(&mut c, solver);
            c
        }
        Cmd::Sweep { common, family, solver } => {
            let mut c = base(Command::Sweep, &common)?;
            apply_family(&mut c, family);
            apply_solver(&mut c, solver);
            c
        }
        Cmd::Rates { common, family, solver } => {
            let mut c = base(Command::Rates, &common)?;
            apply_family(&mut c, family);
            apply_solver(&mut c, solver);
            c
        }
        Cmd::Barrier { common, s, eps, phi, m } => {
            let mut c = base(Command::Barrier, &common)?;
            set(&mut c.barrier.s, s);
            set(&mut c.barrier.eps, eps);
            set(&mut c.barrier.phi, phi);
            set(&mut c.barrier.m, m);
            c
        }
        Cmd::Trace { common, field, start, tmax, rtol } => {
            let mut c = base(Command::Trace, &common)?;
            set(&mut c.trace.field, field);
            set(&mut c.trace.start, start);
            set(&mut c.trace.t_max, tmax);
            set(&mut c.trace.rtol, rtol);
            c
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = std::env::var("BCPATCH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let cfg = match build_config(cli.command).and_then(|c| {
        c.validate()?;
        Ok(c)
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match run_command(&cfg) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}: {}", cfg.command, if outcome.pass { "PASS" } else { "FAIL" });
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ (bcpatch::Error::Config(_) | bcpatch::Error::Io(_) | bcpatch::Error::Format(_))) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{}: {e}", cfg.command);
            ExitCode::from(1)
        }
    }
}
