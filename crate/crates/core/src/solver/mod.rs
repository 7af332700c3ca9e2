//! Iterative solvers and the convergence-controlled driver loop.
//!
//! The driver starts from the uniform density and, per iteration, applies
//! one update, recomputes `M`, the criterion and the sensitivity, and
//! records the L1/KL step between consecutive iterates. It stops on the
//! first of: equivalence-theorem gap `<= cert_tol`, L1 step `<= l1_tol`,
//! `max_iters`, or (for D with `MonotonicityAction::Fail`) a decrease of
//! `log det M`.

mod diagnostics;
mod multiplicative;
mod vdm;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use diagnostics::{pinsker_check, PinskerCheck, PINSKER_SLACK};
pub use multiplicative::{a_step, d_step, DEAD_CELL};
pub use vdm::{line_search_lambda, segment_gain, vdm_d_step, StepRule};

use crate::certify::SupportPoint;
use crate::design::{Criterion, DesignDensity, DesignProblem, InfoMatrix};
use crate::error::{Error, Result};

/// Slack for the per-iteration monotonicity checks, scaled by
/// `max(1, |criterion value|)`.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Slack for `gain >= p * kl_step`.
pub const GAIN_SLACK: f64 = 1e-8;

/// Every iteration is kept up to this many records, then every 10th.
pub const FULL_HISTORY_LEN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotonicityAction {
    Fail,
    Warn,
}

impl MonotonicityAction {
    /// Fail for D (monotonicity is a theorem), warn for A (it is only observed).
    pub fn default_for(kind: Criterion) -> Self {
        match kind {
            Criterion::D => MonotonicityAction::Fail,
            Criterion::A => MonotonicityAction::Warn,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub criterion: Criterion,
    pub max_iters: usize,
    pub l1_tol: f64,
    pub cert_tol: f64,
    pub record_history: bool,
    pub monotonicity_action: MonotonicityAction,
}

impl SolveOptions {
    pub fn new(criterion: Criterion) -> Self {
        Self {
            criterion,
            max_iters: 5000,
            l1_tol: 1e-9,
            cert_tol: 1e-4,
            record_history: true,
            monotonicity_action: MonotonicityAction::default_for(criterion),
        }
    }

    pub fn max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn cert_tol(mut self, tol: f64) -> Self {
        self.cert_tol = tol;
        self
    }

    pub fn l1_tol(mut self, tol: f64) -> Self {
        self.l1_tol = tol;
        self
    }

    pub fn record_history(mut self, on: bool) -> Self {
        self.record_history = on;
        self
    }

    pub fn monotonicity_action(mut self, action: MonotonicityAction) -> Self {
        self.monotonicity_action = action;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidOptions("max_iters must be >= 1".into()));
        }
        for (name, v) in [("l1_tol", self.l1_tol), ("cert_tol", self.cert_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidOptions(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub criterion_value: f64,
    /// `int |f_n - f_{n-1}|`.
    pub l1_step: f64,
    /// `int f_n log(f_n / f_{n-1})`.
    pub kl_step: f64,
    /// `max sensitivity - bound` for `f_n`.
    pub cert_gap: f64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    CertTol,
    L1Tol,
    MaxIters,
    MonotonicityViolation,
}

impl TerminationReason {
    pub fn is_converged(self) -> bool {
        matches!(self, TerminationReason::CertTol | TerminationReason::L1Tol)
    }
}

/// Per-iteration invariant checks, counted over every iteration whether or
/// not it was kept in the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub steps: usize,
    /// D: iterations where `log det M` dropped by more than the slack.
    pub logdet_decreases: usize,
    /// D, multiplicative only: iterations with `gain < p * kl_step - 1e-8`.
    pub gain_bound_violations: usize,
    /// Smallest `gain - p * kl_step` seen (D, multiplicative).
    pub min_gain_margin: f64,
    /// A: iterations where `tr M^{-1}` rose by more than the slack.
    pub trace_increases: usize,
    pub pinsker_violations: usize,
    /// Largest `|sum f mu - 1|` over all iterates.
    pub max_normalization_error: f64,
    /// Smallest density value over all iterates.
    pub min_density: f64,
}

impl RunDiagnostics {
    fn new() -> Self {
        Self {
            steps: 0,
            logdet_decreases: 0,
            gain_bound_violations: 0,
            min_gain_margin: f64::INFINITY,
            trace_increases: 0,
            pinsker_violations: 0,
            max_normalization_error: 0.0,
            min_density: f64::INFINITY,
        }
    }

    fn observe_density(&mut self, f: &DesignDensity, problem: &DesignProblem) {
        let err = (f.total_mass(problem.grid()) - 1.0).abs();
        self.max_normalization_error = self.max_normalization_error.max(err);
        self.min_density = self.min_density.min(f.min_value());
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub criterion: Criterion,
    pub final_density: DesignDensity,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: TerminationReason,
    pub final_value: f64,
    pub final_log_det: f64,
    pub final_gap: f64,
    pub diagnostics: RunDiagnostics,
    pub elapsed: Duration,
    /// Filled by [`crate::certify::attach_support`].
    pub support: Vec<SupportPoint>,
}

#[derive(Debug, Clone, Copy)]
enum Update {
    Multiplicative,
    Vdm(StepRule),
}

/// Runs the multiplicative algorithm for `opts.criterion`.
pub fn solve(problem: &DesignProblem, opts: &SolveOptions) -> Result<SolveReport> {
    drive(problem, opts, Update::Multiplicative)
}

/// Runs the vertex-direction baseline (D only; `opts.criterion` is ignored).
pub fn solve_vdm(
    problem: &DesignProblem,
    opts: &SolveOptions,
    rule: StepRule,
) -> Result<SolveReport> {
    let mut opts = opts.clone();
    opts.criterion = Criterion::D;
    if rule == StepRule::Harmonic {
        // fixed step lengths can overshoot; only a line search is monotone
        opts.monotonicity_action = MonotonicityAction::Warn;
    }
    drive(problem, &opts, Update::Vdm(rule))
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn drive(problem: &DesignProblem, opts: &SolveOptions, update: Update) -> Result<SolveReport> {
    opts.validate()?;
    let start = Instant::now();
    let kind = opts.criterion;
    let p = problem.p();
    let bound = kind.bound(p);

    let mut f = problem.uniform_density();
    let mut info: InfoMatrix = problem.info_matrix(&f)?;
    let mut sens = problem.sensitivities(kind, &info);
    let mut gap = max_of(&sens) - bound;

    let mut diag = RunDiagnostics::new();
    diag.observe_density(&f, problem);
    let mut history = Vec::new();
    let record = |history: &mut Vec<IterationRecord>, rec: IterationRecord, force: bool| {
        if !opts.record_history {
            return;
        }
        if force || rec.iter < FULL_HISTORY_LEN || rec.iter % 10 == 0 {
            history.push(rec);
        }
    };
    record(
        &mut history,
        IterationRecord {
            iter: 0,
            criterion_value: info.criterion_value(kind),
            l1_step: 0.0,
            kl_step: 0.0,
            cert_gap: gap,
            wall_time: start.elapsed(),
        },
        false,
    );

    let mut iter = 0;
    let mut warned = false;
    let reason = loop {
        if gap <= opts.cert_tol {
            break TerminationReason::CertTol;
        }
        if iter >= opts.max_iters {
            break TerminationReason::MaxIters;
        }
        iter += 1;

        let f_new = match update {
            Update::Multiplicative => multiplicative::apply_update(problem, &f, kind, &sens),
            Update::Vdm(rule) => vdm::vdm_update(problem, &f, &sens, rule, iter),
        };
        let info_new = problem.info_matrix(&f_new)?;
        let sens_new = problem.sensitivities(kind, &info_new);
        let step = diagnostics::step_distances(
            f_new.values(),
            f.values(),
            problem.grid().measures(),
        )?;

        diag.steps += 1;
        diag.observe_density(&f_new, problem);
        if !step.holds {
            diag.pinsker_violations += 1;
        }

        let old_value = info.criterion_value(kind);
        let new_value = info_new.criterion_value(kind);
        let slack = MONOTONE_SLACK * old_value.abs().max(1.0);
        let mut violated = false;
        match kind {
            Criterion::D => {
                let gain = info_new.log_det() - info.log_det();
                if gain < -slack {
                    diag.logdet_decreases += 1;
                    violated = true;
                }
                if let Update::Multiplicative = update {
                    let margin = gain - p as f64 * step.kl;
                    diag.min_gain_margin = diag.min_gain_margin.min(margin);
                    if margin < -GAIN_SLACK {
                        diag.gain_bound_violations += 1;
                    }
                }
            }
            Criterion::A => {
                if new_value - old_value > slack {
                    diag.trace_increases += 1;
                    violated = true;
                }
            }
        }

        f = f_new;
        info = info_new;
        sens = sens_new;
        gap = max_of(&sens) - bound;

        record(
            &mut history,
            IterationRecord {
                iter,
                criterion_value: new_value,
                l1_step: step.l1,
                kl_step: step.kl,
                cert_gap: gap,
                wall_time: start.elapsed(),
            },
            false,
        );

        if violated {
            match opts.monotonicity_action {
                MonotonicityAction::Fail => break TerminationReason::MonotonicityViolation,
                MonotonicityAction::Warn => {
                    if !warned {
                        log::warn!(
                            "{kind}-criterion increased at iteration {iter}: {old_value:.17e} -> {new_value:.17e}"
                        );
                        warned = true;
                    }
                }
            }
        }
        if gap <= opts.cert_tol {
            break TerminationReason::CertTol;
        }
        if step.l1 <= opts.l1_tol {
            break TerminationReason::L1Tol;
        }
    };

    if let Some(last) = history.last() {
        if last.iter != iter && opts.record_history {
            history.push(IterationRecord {
                iter,
                criterion_value: info.criterion_value(kind),
                l1_step: f64::NAN,
                kl_step: f64::NAN,
                cert_gap: gap,
                wall_time: start.elapsed(),
            });
        }
    }

    Ok(SolveReport {
        criterion: kind,
        final_value: info.criterion_value(kind),
        final_log_det: info.log_det(),
        final_gap: gap,
        final_density: f,
        history,
        iterations: iter,
        converged: reason.is_converged(),
        termination_reason: reason,
        diagnostics: diag,
        elapsed: start.elapsed(),
        support: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use crate::space::{grid_box, grid_box_with, BoxRule, GridLimits};

    fn linear_1d(n: usize) -> DesignProblem {
        let model = ModelSpec::from_exponents(1, vec![vec![0], vec![1]]).unwrap();
        DesignProblem::new(model, grid_box(&[[-1.0, 1.0]], n).unwrap()).unwrap()
    }

    #[test]
    fn options_validation() {
        assert!(SolveOptions::new(Criterion::D).max_iters(0).validate().is_err());
        assert!(SolveOptions::new(Criterion::D).cert_tol(0.0).validate().is_err());
        assert!(SolveOptions::new(Criterion::A).l1_tol(f64::NAN).validate().is_err());
        assert_eq!(
            SolveOptions::new(Criterion::A).monotonicity_action,
            MonotonicityAction::Warn
        );
    }

    #[test]
    fn one_d_linear_d_optimum_splits_mass_between_end_cells() {
        let prob = linear_1d(41);
        let rep = solve(&prob, &SolveOptions::new(Criterion::D)).unwrap();
        assert_eq!(rep.termination_reason, TerminationReason::CertTol);
        assert!(rep.final_gap <= 1e-4);
        let m = rep.final_density.masses(prob.grid());
        assert!((m[0] - 0.5).abs() < 1e-3, "{}", m[0]);
        assert!((m[40] - 0.5).abs() < 1e-3, "{}", m[40]);
        assert_eq!(rep.diagnostics.logdet_decreases, 0);
        assert_eq!(rep.diagnostics.pinsker_violations, 0);
    }

    #[test]
    fn history_is_subsampled_after_the_cap() {
        // harmonic VDM steps keep oscillating between the two end cells, so
        // neither tolerance triggers
        let prob = linear_1d(8);
        let rep = solve_vdm(
            &prob,
            &SolveOptions::new(Criterion::D)
                .cert_tol(1e-300)
                .l1_tol(1e-300)
                .max_iters(FULL_HISTORY_LEN + 95),
            StepRule::Harmonic,
        )
        .unwrap();
        assert_eq!(rep.termination_reason, TerminationReason::MaxIters);
        // 0..FULL, then every 10th up to FULL + 90, then the final iterate
        assert_eq!(rep.history.len(), FULL_HISTORY_LEN + 10 + 1);
        assert_eq!(rep.history.last().unwrap().iter, FULL_HISTORY_LEN + 95);
    }

    #[test]
    fn monotone_and_normalized_on_a_small_square() {
        let grid =
            grid_box_with(&[[-1.0, 1.0]; 2], 9, BoxRule::Closed, GridLimits::default()).unwrap();
        let prob = DesignProblem::new(ModelSpec::full_quadratic(2).unwrap(), grid).unwrap();
        for kind in [Criterion::D, Criterion::A] {
            let rep = solve(&prob, &SolveOptions::new(kind).cert_tol(1e-8)).unwrap();
            assert!(rep.converged);
            let d = &rep.diagnostics;
            assert_eq!(d.logdet_decreases + d.trace_increases, 0);
            assert_eq!(d.gain_bound_violations, 0);
            assert!(d.max_normalization_error <= 1e-12);
            assert!(d.min_density >= 0.0);
            let vals: Vec<f64> = rep.history.iter().map(|r| r.criterion_value).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
        }
    }

    #[test]
    fn singular_model_fails_at_iteration_zero() {
        // w and w^2 are collinear on a grid containing only 0 and 1
        let model = ModelSpec::from_exponents(1, vec![vec![1], vec![2]]).unwrap();
        let grid = crate::space::QuadratureGrid::scattered(1, vec![0.0, 1.0], vec![0.5, 0.5])
            .unwrap();
        let prob = DesignProblem::new(model, grid).unwrap();
        assert!(matches!(
            solve(&prob, &SolveOptions::new(Criterion::D)),
            Err(Error::SingularInformation { .. })
        ));
    }
}
