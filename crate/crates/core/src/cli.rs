//! The `optdes` command line.
//!
//! Exit codes: 0 success, 1 error, 2 a preset run missed its reference
//! values, 3 the solver stopped on a monotonicity violation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certify::{certify, extract_support};
use crate::config::{preset, preset_description, EmitFlags, RunConfig, PRESET_NAMES};
use crate::design::Criterion;
use crate::error::Result;
use crate::io::read_density_csv;
use crate::report::{execute, write_outputs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REPRODUCTION: i32 = 2;
pub const EXIT_MONOTONICITY: i32 = 3;

pub const OUT_ENV: &str = "OPTDES_OUT";
pub const DEFAULT_OUT: &str = "optdes-out";

#[derive(Debug, Parser)]
#[command(name = "optdes", version, about = "Optimal continuous experimental designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute, certify and report an optimal design.
    Solve(SolveArgs),
    /// Re-certify a density dump against a problem.
    Certify(CertifyArgs),
    /// Inspect the built-in presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset as a config file.
    Show {
        name: String,
        #[arg(long, default_value = "D", value_parser = parse_criterion)]
        criterion: Criterion,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Built-in problem (see `preset list`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Run configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// D or A; overrides the config.
    #[arg(long, value_parser = parse_criterion)]
    criterion: Option<Criterion>,
    /// Grid resolution: cells per dimension for boxes, n radial by 2n
    /// angular for discs.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    cert_tol: Option<f64>,
    #[arg(long)]
    l1_tol: Option<f64>,
    /// Worker threads (1 for bitwise-reproducible runs).
    #[arg(long)]
    threads: Option<usize>,
    /// Artifacts to write; replaces the config's emit flags.
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Vec<Artifact>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Density CSV as written by `solve`.
    #[arg(long)]
    density: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Artifact {
    Report,
    History,
    Density,
    Support,
}

fn parse_criterion(s: &str) -> std::result::Result<Criterion, String> {
    s.parse()
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Certify(a) => run_certify(a),
        Command::Preset { action } => run_preset(action),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn load_config(p: &ProblemArgs) -> Result<RunConfig> {
    let mut cfg = match (&p.preset, &p.config) {
        (Some(name), _) => preset(name, p.criterion.unwrap_or(Criterion::D))?,
        (None, Some(path)) => RunConfig::load(path)?,
        (None, None) => unreachable!("clap requires --preset or --config"),
    };
    if let Some(c) = p.criterion {
        cfg.criterion = c;
    }
    if let Some(n) = p.grid {
        cfg.region.set_resolution(n);
    }
    Ok(cfg)
}

fn output_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run_solve(a: SolveArgs) -> Result<i32> {
    let mut cfg = load_config(&a.problem)?;
    if let Some(n) = a.max_iters {
        cfg.solver.max_iters = n;
    }
    if let Some(t) = a.cert_tol {
        cfg.solver.cert_tol = t;
    }
    if let Some(t) = a.l1_tol {
        cfg.solver.l1_tol = t;
    }
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if !a.emit.is_empty() {
        let mut e = EmitFlags::none();
        for art in &a.emit {
            match art {
                Artifact::Report => e.report = true,
                Artifact::History => e.history = true,
                Artifact::Density => e.density = true,
                Artifact::Support => e.support = true,
            }
        }
        cfg.emit = e;
    }
    let dir = output_dir(a.out.as_deref(), &cfg);
    cfg.out_dir = Some(dir.clone());
    // fail on a bad config before anything is written
    cfg.problem()?;

    let out = execute(&cfg)?;
    print!("{}", out.summary());
    for path in write_outputs(&out, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(if out.monotonicity_failed() {
        EXIT_MONOTONICITY
    } else if out.reproduction_failed() {
        EXIT_REPRODUCTION
    } else {
        EXIT_OK
    })
}

fn run_certify(a: CertifyArgs) -> Result<i32> {
    let cfg = load_config(&a.problem)?;
    let problem = cfg.problem()?;
    let f = read_density_csv(&a.density, problem.grid())?;
    let cert = certify(&problem, &f, cfg.criterion)?;
    let support = extract_support(problem.grid(), &f, cfg.solver.mass_floor)?;
    println!(
        "{:?}-criterion value {:.10}",
        cfg.criterion,
        problem.criterion_value(cfg.criterion, &f)?
    );
    println!(
        "grid certificate: max sensitivity {:.6} vs bound {}, gap {:.3e} at {:?}",
        cert.sensitivity_max, cert.bound, cert.gap, cert.argmax_node
    );
    println!(
        "{} support points, residual mass {:.2e}",
        support.points.len(),
        support.residual_mass
    );
    for p in &support.points {
        println!("  {:?} weight {:.5} cells {}", p.location, p.weight, p.n_cells);
    }
    Ok(EXIT_OK)
}

fn run_preset(action: PresetAction) -> Result<i32> {
    match action {
        PresetAction::List => {
            for name in PRESET_NAMES {
                println!("{name:<10} {}", preset_description(name)?);
            }
        }
        PresetAction::Show { name, criterion } => {
            print!("{}", preset(&name, criterion)?.to_toml());
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_solve_flags() {
        let cli = Cli::try_parse_from([
            "optdes", "solve", "--preset", "setting3", "--criterion", "A", "--grid", "11",
            "--emit", "density,support", "--threads", "1",
        ])
        .unwrap();
        let Command::Solve(a) = cli.command else { panic!() };
        assert_eq!(a.problem.criterion, Some(Criterion::A));
        assert_eq!(a.emit, vec![Artifact::Density, Artifact::Support]);
        let cfg = load_config(&a.problem).unwrap();
        assert_eq!(cfg.criterion, Criterion::A);
        assert_eq!(cfg.problem().unwrap().grid().len(), 121);
    }

    #[test]
    fn preset_and_config_are_exclusive() {
        assert!(Cli::try_parse_from(["optdes", "solve", "--preset", "setting1", "--config", "c.toml"]).is_err());
        assert!(Cli::try_parse_from(["optdes", "solve"]).is_err());
        assert!(Cli::try_parse_from(["optdes", "solve", "--preset", "setting1", "--criterion", "E"]).is_err());
    }

    #[test]
    fn out_flag_beats_config() {
        let mut cfg = preset("setting1", Criterion::D).unwrap();
        cfg.out_dir = Some("from-config".into());
        assert_eq!(output_dir(Some(Path::new("flag")), &cfg), PathBuf::from("flag"));
        assert_eq!(output_dir(None, &cfg), PathBuf::from("from-config"));
    }
}
