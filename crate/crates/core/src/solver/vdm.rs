//! Vertex-direction (Fedorov-Wynn) baseline for D-optimality: move a
//! fraction `lambda` of the mass onto the cell where the sensitivity peaks.

use serde::{Deserialize, Serialize};

use crate::design::{Criterion, DesignDensity, DesignProblem};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `lambda_n = 1 / (n + 1)`.
    Harmonic,
    /// Golden-section maximization of `log det((1-lambda) M + lambda x x^T)`.
    #[default]
    LineSearch,
}

/// `log det((1-lambda) M + lambda x x^T) - log det M` for `phi = x^T M^{-1} x`,
/// from `det(A + u v^T) = det A (1 + v^T A^{-1} u)`.
pub fn segment_gain(lambda: f64, phi: f64, p: usize) -> f64 {
    (p as f64 - 1.0) * (-lambda).ln_1p() + (1.0 - lambda + lambda * phi).ln()
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximizer of [`segment_gain`] on `[0, 1)`. Zero whenever `phi <= p`.
pub fn line_search_lambda(phi: f64, p: usize) -> f64 {
    if phi <= p as f64 {
        return 0.0;
    }
    let g = |l: f64| segment_gain(l, phi, p);
    let (mut a, mut b) = (0.0, 1.0 - 1e-12);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-13 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - GOLDEN * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + GOLDEN * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// One VDM step at iteration `n >= 1`.
pub fn vdm_d_step(
    problem: &DesignProblem,
    f: &DesignDensity,
    rule: StepRule,
    n: usize,
) -> Result<DesignDensity> {
    let info = problem.info_matrix(f)?;
    let phi = problem.sensitivities(Criterion::D, &info);
    Ok(vdm_update(problem, f, &phi, rule, n))
}

pub(crate) fn vdm_update(
    problem: &DesignProblem,
    f: &DesignDensity,
    phi: &[f64],
    rule: StepRule,
    n: usize,
) -> DesignDensity {
    let (k, phi_k) = argmax(phi);
    let lambda = match rule {
        StepRule::Harmonic => 1.0 / (n as f64 + 1.0),
        StepRule::LineSearch => line_search_lambda(phi_k, problem.p()),
    };
    if lambda == 0.0 {
        return f.clone();
    }
    // v - lambda v rather than (1 - lambda) v: the rounding of 1 - lambda
    // would bias every cell the same way and the total mass would drift
    let mut values: Vec<f64> = f.values().iter().map(|&v| v - lambda * v).collect();
    values[k] += lambda / problem.grid().measures()[k];
    DesignDensity::from_step(f.grid_id(), values)
}

/// First index of the maximum.
pub(crate) fn argmax(xs: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}
