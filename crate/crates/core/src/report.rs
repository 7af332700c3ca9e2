//! Running a configured problem end to end and reporting on it.
//!
//! [`execute`] solves, certifies and extracts support without touching the
//! file system; [`write_outputs`] then emits whatever the config asks for.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::certify::{
    certify, extract_support, radial_band_masses, refine_support_weights, ring_uniformity,
    Certificate, RefinedDesign, Support, SupportPoint,
};
use crate::config::{Reference, RunConfig, WeightClass};
use crate::design::{Criterion, DesignProblem};
use crate::error::{Error, Result};
use crate::io::{write_density_csv, write_history_csv, write_support_csv};
use crate::solver::{solve, RunDiagnostics, SolveReport, TerminationReason};
use crate::space::Region;

/// Tolerance for the refinement solve on the extracted support points.
pub const REFINE_CERT_TOL: f64 = 1e-10;
pub const REFINE_MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `|computed - expected| <= tolerance`.
    Within,
    /// `computed >= expected`.
    AtLeast,
    /// `computed <= expected`.
    AtMost,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub computed: f64,
    /// The same quantity from the raw grid density, when `computed` comes
    /// from the refined weights.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<f64>,
    pub expected: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub check: Check,
    pub pass: bool,
}

impl ComparisonRow {
    fn new(quantity: impl Into<String>, computed: f64, expected: f64, tolerance: f64, check: Check) -> Self {
        let deviation = (computed - expected).abs();
        let pass = match check {
            Check::Within => deviation <= tolerance,
            Check::AtLeast => computed >= expected,
            Check::AtMost => computed <= expected,
            Check::Info => true,
        };
        Self {
            quantity: quantity.into(),
            computed,
            raw: None,
            expected,
            deviation,
            tolerance,
            check,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub passed: bool,
    /// Largest deviation over the `within` rows.
    pub max_deviation: f64,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    fn from_rows(rows: Vec<ComparisonRow>) -> Self {
        Self {
            passed: rows.iter().all(|r| r.pass),
            max_deviation: rows
                .iter()
                .filter(|r| r.check == Check::Within)
                .map(|r| r.deviation)
                .fold(0.0, f64::max),
            rows,
        }
    }
}

/// Everything a run produces, in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub problem: DesignProblem,
    pub solve: SolveReport,
    pub certificate: Certificate,
    pub support: Support,
    pub refined: Option<RefinedDesign>,
    /// Why refinement was skipped, if it was requested but not done.
    pub refine_note: Option<String>,
    pub comparison: Option<Comparison>,
}

impl RunOutput {
    pub fn monotonicity_failed(&self) -> bool {
        self.solve.termination_reason == TerminationReason::MonotonicityViolation
    }

    pub fn reproduction_failed(&self) -> bool {
        self.comparison.as_ref().is_some_and(|c| !c.passed)
    }
}

/// Solves, certifies and extracts the support of the configured problem.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let problem = config.problem()?;
    match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidOptions(format!("thread pool: {e}")))?;
            pool.install(|| execute_problem(config, problem))
        }
        None => execute_problem(config, problem),
    }
}

fn execute_problem(config: &RunConfig, problem: DesignProblem) -> Result<RunOutput> {
    let kind = config.criterion;
    let mut rep = solve(&problem, &config.solve_options())?;
    log::info!(
        "{} after {} iterations, gap {:.3e}",
        fmt_reason(rep.termination_reason),
        rep.iterations,
        rep.final_gap
    );
    let certificate = certify(&problem, &rep.final_density, kind)?;
    let support = extract_support(problem.grid(), &rep.final_density, config.solver.mass_floor)?;
    rep.support = support.points.clone();

    let (refined, refine_note) = if config.solver.refine_support {
        match refine_support_weights(&problem, &support.points, kind, REFINE_CERT_TOL, REFINE_MAX_ITERS) {
            Ok(r) => (Some(r), None),
            Err(Error::SingularInformation { .. }) => (
                None,
                Some("support peaks do not carry a nonsingular design (diffuse clusters)".into()),
            ),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    let comparison = match config.reference()? {
        Some(reference) => Some(compare(&problem, &rep, &support, refined.as_ref(), &reference)?),
        None => None,
    };
    Ok(RunOutput {
        config: config.clone(),
        problem,
        solve: rep,
        certificate,
        support,
        refined,
        refine_note,
        comparison,
    })
}

fn compare(
    problem: &DesignProblem,
    rep: &SolveReport,
    support: &Support,
    refined: Option<&RefinedDesign>,
    reference: &Reference,
) -> Result<Comparison> {
    let grid = problem.grid();
    let f = &rep.final_density;
    let rows = match reference {
        Reference::Lattice { classes, tol } => {
            let Region::Box { intervals } = region_of(problem) else {
                return Err(Error::InvalidOptions("lattice reference needs a box region".into()));
            };
            lattice_rows(&intervals, classes, *tol, &support.points, refined)
        }
        Reference::CentreAndRing {
            centre,
            ring,
            tol,
            sectors,
            uniformity_tol,
        } => {
            let bands = radial_band_masses(grid, f)?;
            let (centre_pt, radius) = match region_of(problem) {
                Region::Disc { center, radius } => (center, radius),
                Region::Box { .. } => unreachable!("polar grids come from discs"),
            };
            let centre_mass = support
                .points
                .iter()
                .filter(|s| {
                    let r2: f64 = s.peak_location.iter().zip(&centre_pt).map(|(x, c)| (x - c) * (x - c)).sum();
                    r2.sqrt() < 0.1 * radius
                })
                .map(|s| s.weight)
                .fold(0.0, f64::max);
            let ring_mass = *bands.last().expect("polar grids have bands");
            let row = |name: &str, v: f64, want: Option<f64>| match want {
                Some(w) => ComparisonRow::new(name, v, w, *tol, Check::Within),
                None => ComparisonRow::new(name, v, f64::NAN, f64::NAN, Check::Info),
            };
            vec![
                row("centre cluster weight", centre_mass, *centre),
                row("outer band mass", ring_mass, *ring),
                match uniformity_tol {
                    Some(t) => ComparisonRow::new(
                        format!("ring uniformity, {sectors} sectors"),
                        ring_uniformity(grid, f, *sectors)?,
                        *t,
                        f64::NAN,
                        Check::AtMost,
                    ),
                    None => ComparisonRow::new(
                        format!("ring uniformity, {sectors} sectors"),
                        ring_uniformity(grid, f, *sectors)?,
                        f64::NAN,
                        f64::NAN,
                        Check::Info,
                    ),
                },
            ]
        }
        Reference::Ring {
            min_band_mass,
            sectors,
            uniformity_tol,
        } => {
            let bands = radial_band_masses(grid, f)?;
            vec![
                ComparisonRow::new(
                    "outer band mass",
                    *bands.last().expect("polar grids have bands"),
                    *min_band_mass,
                    f64::NAN,
                    Check::AtLeast,
                ),
                ComparisonRow::new(
                    format!("ring uniformity, {sectors} sectors"),
                    ring_uniformity(grid, f, *sectors)?,
                    *uniformity_tol,
                    f64::NAN,
                    Check::AtMost,
                ),
            ]
        }
    };
    Ok(Comparison::from_rows(rows))
}

fn region_of(problem: &DesignProblem) -> Region {
    use crate::space::GridLayout;
    match problem.grid().layout() {
        GridLayout::Polar { center, radius, .. } => Region::Disc {
            center: *center,
            radius: *radius,
        },
        _ => {
            // tensor grids span their box; recover the bounds from the nodes
            let d = problem.grid().dimension();
            let mut intervals = vec![[f64::INFINITY, f64::NEG_INFINITY]; d];
            for w in problem.grid().nodes() {
                for (iv, &x) in intervals.iter_mut().zip(w) {
                    iv[0] = iv[0].min(x);
                    iv[1] = iv[1].max(x);
                }
            }
            Region::Box { intervals }
        }
    }
}

/// Snaps each coordinate to -1 (lower end), 0 (middle) or 1 (upper end) of
/// its interval, or `None` if it is near none of them.
pub fn lattice_index(intervals: &[[f64; 2]], w: &[f64]) -> Option<Vec<i8>> {
    intervals
        .iter()
        .zip(w)
        .map(|(&[a, b], &x)| {
            let t = 2.0 * (x - a) / (b - a) - 1.0;
            let k = t.round();
            ((t - k).abs() <= 0.1 && k.abs() <= 1.0).then_some(k as i8)
        })
        .collect()
}

fn lattice_rows(
    intervals: &[[f64; 2]],
    classes: &[WeightClass],
    tol: f64,
    raw: &[SupportPoint],
    refined: Option<&RefinedDesign>,
) -> Vec<ComparisonRow> {
    let d = intervals.len();
    let n_lattice = 3usize.pow(d as u32);
    let mut rows = vec![ComparisonRow::new(
        "support points",
        raw.len() as f64,
        n_lattice as f64,
        0.0,
        Check::Within,
    )];
    // weight per lattice point: raw from clusters, refined from atoms
    let mut raw_w = vec![0.0; n_lattice];
    let mut ref_w = vec![0.0; n_lattice];
    let flat = |idx: &[i8]| idx.iter().fold(0usize, |acc, &k| acc * 3 + (k + 1) as usize);
    for (i, s) in raw.iter().enumerate() {
        if let Some(idx) = lattice_index(intervals, &s.peak_location) {
            raw_w[flat(&idx)] += s.weight;
            if let Some(r) = refined {
                ref_w[flat(&idx)] += r.weights[i];
            }
        }
    }
    let mut idx = vec![-1i8; d];
    for k in 0..n_lattice {
        let mut rem = k;
        for slot in idx.iter_mut().rev() {
            *slot = (rem % 3) as i8 - 1;
            rem /= 3;
        }
        let n_boundary = idx.iter().filter(|&&c| c != 0).count();
        let Some(class) = classes.iter().find(|c| c.n_boundary == n_boundary) else {
            continue;
        };
        let coords: Vec<String> = idx
            .iter()
            .zip(intervals)
            .map(|(&c, &[a, b])| format!("{}", 0.5 * (a + b) + 0.5 * c as f64 * (b - a)))
            .collect();
        let name = format!("{} ({})", class.label, coords.join(", "));
        let computed = if refined.is_some() { ref_w[k] } else { raw_w[k] };
        let mut row = ComparisonRow::new(name, computed, class.weight, tol, Check::Within);
        if refined.is_some() {
            row.raw = Some(raw_w[k]);
        }
        rows.push(row);
    }
    rows
}

fn fmt_reason(r: TerminationReason) -> &'static str {
    match r {
        TerminationReason::CertTol => "certificate tolerance reached",
        TerminationReason::L1Tol => "L1 step tolerance reached",
        TerminationReason::MaxIters => "iteration limit reached",
        TerminationReason::MonotonicityViolation => "stopped on a monotonicity violation",
    }
}

#[derive(Debug, Serialize)]
struct Termination {
    reason: TerminationReason,
    converged: bool,
    iterations: usize,
    criterion_value: f64,
    log_det: f64,
    elapsed_seconds: f64,
}

#[derive(Debug, Serialize)]
struct CertificateReport<'a> {
    /// Suboptimality is bounded over the grid nodes only.
    scope: &'static str,
    #[serde(flatten)]
    certificate: &'a Certificate,
}

#[derive(Debug, Serialize)]
struct RefinedReport {
    support_gap: f64,
    grid_gap: f64,
    criterion_value: f64,
    iterations: usize,
    points: Vec<RefinedPoint>,
}

#[derive(Debug, Serialize)]
struct RefinedPoint {
    location: Vec<f64>,
    weight: f64,
}

#[derive(Debug, Serialize)]
struct SupportReport<'a> {
    residual_mass: f64,
    points: &'a [SupportPoint],
}

/// The structured run report written to `report.toml`.
#[derive(Debug, Serialize)]
struct RunReport<'a> {
    config: &'a RunConfig,
    termination: Termination,
    diagnostics: &'a RunDiagnostics,
    certificate: CertificateReport<'a>,
    support: SupportReport<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refined: Option<RefinedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refine_note: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a Comparison>,
}

impl RunOutput {
    pub fn report_toml(&self) -> String {
        let s = &self.solve;
        let report = RunReport {
            config: &self.config,
            termination: Termination {
                reason: s.termination_reason,
                converged: s.converged,
                iterations: s.iterations,
                criterion_value: s.final_value,
                log_det: s.final_log_det,
                elapsed_seconds: s.elapsed.as_secs_f64(),
            },
            diagnostics: &s.diagnostics,
            certificate: CertificateReport {
                scope: "grid",
                certificate: &self.certificate,
            },
            support: SupportReport {
                residual_mass: self.support.residual_mass,
                points: &self.support.points,
            },
            refined: self.refined.as_ref().map(|r| RefinedReport {
                support_gap: r.support_gap,
                grid_gap: r.grid_certificate.gap,
                criterion_value: r.criterion_value,
                iterations: r.iterations,
                points: r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, &w)| RefinedPoint {
                        location: p.clone(),
                        weight: w,
                    })
                    .collect(),
            }),
            refine_note: self.refine_note.as_deref(),
            comparison: self.comparison.as_ref(),
        };
        toml::to_string_pretty(&report).expect("run report always serializes")
    }

    /// Human-readable summary for the terminal.
    pub fn summary(&self) -> String {
        let s = &self.solve;
        let c = &self.certificate;
        let mut out = String::new();
        let kind = match self.config.criterion {
            Criterion::D => "D",
            Criterion::A => "A",
        };
        let _ = writeln!(out, "{kind}-optimal design, {}", self.problem.model());
        let _ = writeln!(
            out,
            "{} after {} iterations ({:.2} s)",
            fmt_reason(s.termination_reason),
            s.iterations,
            s.elapsed.as_secs_f64()
        );
        let _ = writeln!(
            out,
            "criterion {:.10}  log det {:.10}",
            s.final_value, s.final_log_det
        );
        let _ = writeln!(
            out,
            "grid certificate: max sensitivity {:.6} vs bound {}, gap {:.3e} at {:?}",
            c.sensitivity_max, c.bound, c.gap, c.argmax_node
        );
        let _ = writeln!(
            out,
            "{} support points, residual mass {:.2e}",
            self.support.points.len(),
            self.support.residual_mass
        );
        for p in self.support.points.iter().take(30) {
            let _ = writeln!(
                out,
                "  {:<28} weight {:.5}  cells {}",
                fmt_point(&p.location),
                p.weight,
                p.n_cells
            );
        }
        if self.support.points.len() > 30 {
            let _ = writeln!(out, "  ...");
        }
        if let Some(r) = &self.refined {
            let _ = writeln!(
                out,
                "refined weights on the support peaks (gap {:.1e}, full-grid gap {:.1e})",
                r.support_gap, r.grid_certificate.gap
            );
        }
        if let Some(note) = &self.refine_note {
            let _ = writeln!(out, "no refinement: {note}");
        }
        if let Some(cmp) = &self.comparison {
            let _ = writeln!(out, "reference comparison:");
            for r in &cmp.rows {
                let verdict = if r.pass { "ok" } else { "FAIL" };
                let expected = match r.check {
                    Check::Within => format!("{:.4} +- {}", r.expected, r.tolerance),
                    Check::AtLeast => format!(">= {}", r.expected),
                    Check::AtMost => format!("<= {}", r.expected),
                    Check::Info => "-".into(),
                };
                let raw = r.raw.map(|v| format!(" (grid {v:.5})")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "  {:<36} {:.5}{raw}  expected {expected}  {verdict}",
                    r.quantity, r.computed
                );
            }
            let _ = writeln!(
                out,
                "reproduction {} (max deviation {:.2e})",
                if cmp.passed { "passed" } else { "FAILED" },
                cmp.max_deviation
            );
        }
        out
    }
}

fn fmt_point(w: &[f64]) -> String {
    let parts: Vec<String> = w.iter().map(|x| format!("{x:+.4}")).collect();
    format!("({})", parts.join(", "))
}

/// Writes the artifacts enabled in the config's emit flags into `dir`,
/// creating it if needed. Returns the paths written.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let emit = out.config.emit;
    let grid = out.problem.grid();
    let mut written = Vec::new();
    if emit.report {
        let path = dir.join("report.toml");
        std::fs::write(&path, out.report_toml()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if emit.history {
        let path = dir.join("history.csv");
        write_history_csv(&path, &out.solve.history)?;
        written.push(path);
    }
    if emit.density {
        let path = dir.join("density.csv");
        write_density_csv(&path, grid, &out.solve.final_density)?;
        written.push(path);
    }
    if emit.support {
        let path = dir.join("support.csv");
        write_support_csv(&path, grid.dimension(), &out.support.points)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn lattice_snapping() {
        let iv = [[-1.0, 1.0], [0.0, 4.0]];
        assert_eq!(lattice_index(&iv, &[-1.0, 2.0]), Some(vec![-1, 0]));
        assert_eq!(lattice_index(&iv, &[0.05, 3.9]), Some(vec![0, 1]));
        assert_eq!(lattice_index(&iv, &[0.5, 0.0]), None);
        assert_eq!(lattice_index(&iv, &[1.5, 0.0]), None);
    }

    #[test]
    fn coarse_square_run_reports_every_lattice_point() {
        let mut cfg = preset("setting3", Criterion::D).unwrap();
        cfg.region.set_resolution(9);
        let out = execute(&cfg).unwrap();
        let cmp = out.comparison.as_ref().unwrap();
        assert_eq!(cmp.rows.len(), 10);
        assert_eq!(cmp.rows[0].computed, 9.0);
        // the weights depend only on the lattice, not on the grid spacing
        assert!(cmp.passed, "{}", out.summary());
        let text = out.report_toml();
        assert!(text.contains("[comparison]") || text.contains("comparison"));
        assert!(text.contains("scope = \"grid\""));
    }

    #[test]
    fn outputs_follow_emit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = preset("setting1", Criterion::D).unwrap();
        cfg.region.set_resolution(10);
        cfg.emit.history = false;
        let out = execute(&cfg).unwrap();
        let files = write_outputs(&out, dir.path()).unwrap();
        let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
        assert_eq!(names, ["report.toml", "density.csv", "support.csv"]);
    }
}
