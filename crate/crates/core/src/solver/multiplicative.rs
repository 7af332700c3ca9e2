//! The multiplicative fixed-point updates.
//!
//! D: `f'(w) = f(w) x(w)^T M(f)^{-1} x(w) / p`.
//!
//! A: `f'(w) = f(w)/p * [(p-1) ||M^{-1} x||^2 / tr(M^{-1}) + 1]`.
//!
//! Both preserve `int f' = 1` exactly in exact arithmetic, since
//! `int f x^T M^{-1} x = tr(M^{-1} M) = p` and
//! `int f ||M^{-1} x||^2 = tr(M^{-1} M M^{-1}) = tr(M^{-1})`.
//! Neither step renormalizes its output.

use crate::design::{Criterion, DesignDensity, DesignProblem};
use crate::error::Result;

/// Densities below this are treated as dead and set to zero.
pub const DEAD_CELL: f64 = 1e-300;

/// One D-step.
pub fn d_step(problem: &DesignProblem, f: &DesignDensity) -> Result<DesignDensity> {
    let info = problem.info_matrix(f)?;
    let phi = problem.sensitivities(Criterion::D, &info);
    Ok(apply_update(problem, f, Criterion::D, &phi))
}

/// One A-step.
pub fn a_step(problem: &DesignProblem, f: &DesignDensity) -> Result<DesignDensity> {
    let info = problem.info_matrix(f)?;
    let psi = problem.sensitivities(Criterion::A, &info);
    Ok(apply_update(problem, f, Criterion::A, &psi))
}

/// Rescales each cell by the criterion's update factor for precomputed
/// sensitivities.
pub(crate) fn apply_update(
    problem: &DesignProblem,
    f: &DesignDensity,
    kind: Criterion,
    sensitivity: &[f64],
) -> DesignDensity {
    let p = problem.p();
    let values = f
        .values()
        .iter()
        .zip(sensitivity)
        .map(|(&fi, &s)| {
            if fi == 0.0 {
                return 0.0;
            }
            let v = fi * kind.update_factor(s, p);
            if v < DEAD_CELL {
                0.0
            } else {
                v
            }
        })
        .collect();
    DesignDensity::from_step(f.grid_id(), values)
}
