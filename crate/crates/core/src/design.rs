//! Design densities, information matrices, criterion values and the
//! sensitivity functions that drive both the updates and the certificates.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{backward_solve, compensated_sum, forward_solve, KahanSum};
use crate::model::ModelSpec;
use crate::space::{GridId, QuadratureGrid};

/// Tolerance on `|sum f mu - 1|` accepted for a density.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Smallest accepted eigenvalue ratio `lambda_min / lambda_max` of `M`.
pub const SINGULARITY_RATIO: f64 = 1e-12;

/// Below this many nodes sensitivities are computed on the calling thread.
const PAR_MIN_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Maximize `log det M(f)`.
    D,
    /// Minimize `tr M(f)^{-1}`.
    A,
}

impl Criterion {
    /// Upper bound of the sensitivity function at the optimum: `p` for D, 1 for A.
    pub fn bound(self, p: usize) -> f64 {
        match self {
            Criterion::D => p as f64,
            Criterion::A => 1.0,
        }
    }

    /// Multiplicative update factor at a node with the given sensitivity.
    #[inline]
    pub fn update_factor(self, sensitivity: f64, p: usize) -> f64 {
        let p = p as f64;
        match self {
            Criterion::D => sensitivity / p,
            Criterion::A => ((p - 1.0) * sensitivity + 1.0) / p,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::D => write!(f, "D"),
            Criterion::A => write!(f, "A"),
        }
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "D" | "d" => Ok(Criterion::D),
            "A" | "a" => Ok(Criterion::A),
            other => Err(format!("unknown criterion `{other}` (expected D or A)")),
        }
    }
}

/// Nonnegative density on the nodes of one grid, normalized so that
/// `sum_i f_i mu_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignDensity {
    values: Vec<f64>,
    grid: GridId,
}

impl DesignDensity {
    /// Wraps `values` after checking sign, length and normalization.
    pub fn new(grid: &QuadratureGrid, values: Vec<f64>) -> Result<Self> {
        let f = Self::check_shape(grid, values)?;
        let total = f.total_mass(grid);
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!(
                "integrates to {total:.17}, expected 1"
            )));
        }
        Ok(f)
    }

    /// Rescales nonnegative `values` so they integrate to one.
    pub fn normalized(grid: &QuadratureGrid, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::check_shape(grid, values)?;
        let total = f.total_mass(grid);
        if !(total > 0.0) {
            return Err(Error::InvalidDensity("density has zero total mass".into()));
        }
        f.values.iter_mut().for_each(|v| *v /= total);
        Ok(f)
    }

    /// `f = 1 / |E|` everywhere.
    pub fn uniform(grid: &QuadratureGrid) -> Self {
        Self {
            values: vec![1.0 / grid.total_measure(); grid.len()],
            grid: grid.id(),
        }
    }

    /// All mass in cell `i`, i.e. `f_i = 1 / mu_i`.
    pub fn point_mass(grid: &QuadratureGrid, i: usize) -> Self {
        let mut values = vec![0.0; grid.len()];
        values[i] = 1.0 / grid.measures()[i];
        Self {
            values,
            grid: grid.id(),
        }
    }

    /// Steps produce normalized output by construction; no re-check.
    pub(crate) fn from_step(grid: GridId, values: Vec<f64>) -> Self {
        Self { values, grid }
    }

    fn check_shape(grid: &QuadratureGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "value {} at cell {i} is negative or not finite",
                values[i]
            )));
        }
        Ok(Self {
            values,
            grid: grid.id(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell masses `f_i mu_i`.
    pub fn masses(&self, grid: &QuadratureGrid) -> Vec<f64> {
        self.values
            .iter()
            .zip(grid.measures())
            .map(|(f, m)| f * m)
            .collect()
    }

    /// `sum_i f_i mu_i`, compensated.
    pub fn total_mass(&self, grid: &QuadratureGrid) -> f64 {
        compensated_sum(self.values.iter().zip(grid.measures()).map(|(f, m)| f * m))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn ensure_on(&self, grid: &QuadratureGrid) -> Result<()> {
        if self.grid != grid.id() || self.values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Symmetric positive definite information matrix with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct InfoMatrix {
    p: usize,
    m: Vec<f64>,
    chol: Vec<f64>,
    log_det: f64,
    inv_trace: f64,
    eigen_ratio: f64,
}

impl InfoMatrix {
    /// Factorizes a row-major `p x p` symmetric matrix. Fails with
    /// `SingularInformation` if `lambda_min <= 1e-12 lambda_max`.
    pub fn from_row_major(p: usize, m: Vec<f64>) -> Result<Self> {
        if m.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p * p,
                got: m.len(),
            });
        }
        let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for a in 0..p {
            for b in 0..a {
                let (x, y) = (m[a * p + b], m[b * p + a]);
                if (x - y).abs() > 1e-12 * scale {
                    return Err(Error::InvalidDensity(format!(
                        "information matrix not symmetric at ({a},{b}): {x} vs {y}"
                    )));
                }
            }
        }
        let mat = DMatrix::from_row_slice(p, p, &m);
        let eig = SymmetricEigen::new(mat.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let ratio = if max > 0.0 { min / max } else { f64::NEG_INFINITY };
        if !(ratio > SINGULARITY_RATIO) {
            return Err(Error::SingularInformation { p, ratio });
        }
        let chol = mat
            .cholesky()
            .ok_or(Error::SingularInformation { p, ratio })?;
        let l = chol.l();
        let mut lf = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..=a {
                lf[a * p + b] = l[(a, b)];
            }
        }
        let log_det = 2.0 * (0..p).map(|i| lf[i * p + i].ln()).sum::<f64>();
        // tr(M^{-1}) = ||L^{-1}||_F^2, one unit-vector solve per column
        let mut inv_trace = KahanSum::new();
        let mut e = vec![0.0; p];
        for j in 0..p {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            forward_solve(&lf, p, &mut e);
            for v in &e {
                inv_trace.add(v * v);
            }
        }
        Ok(Self {
            p,
            m,
            chol: lf,
            log_det,
            inv_trace: inv_trace.value(),
            eigen_ratio: ratio,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[f64] {
        &self.m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.m[a * self.p + b]
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `tr(M^{-1})`.
    pub fn inv_trace(&self) -> f64 {
        self.inv_trace
    }

    /// `lambda_min / lambda_max`.
    pub fn eigen_ratio(&self) -> f64 {
        self.eigen_ratio
    }

    pub fn criterion_value(&self, kind: Criterion) -> f64 {
        match kind {
            Criterion::D => -self.log_det,
            Criterion::A => self.inv_trace,
        }
    }

    /// `x^T M^{-1} x` via one triangular solve; `buf` is scratch of length p.
    #[inline]
    pub fn quad_form(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        buf.copy_from_slice(x);
        forward_solve(&self.chol, self.p, buf);
        buf.iter().map(|v| v * v).sum()
    }

    /// `M^{-1} x` written into `buf`.
    #[inline]
    pub fn solve_into(&self, x: &[f64], buf: &mut [f64]) {
        buf.copy_from_slice(x);
        forward_solve(&self.chol, self.p, buf);
        backward_solve(&self.chol, self.p, buf);
    }

    /// `||M^{-1} x||^2 / tr(M^{-1})`.
    #[inline]
    pub fn a_ratio(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        self.solve_into(x, buf);
        buf.iter().map(|v| v * v).sum::<f64>() / self.inv_trace
    }

    #[inline]
    pub fn sensitivity(&self, kind: Criterion, x: &[f64], buf: &mut [f64]) -> f64 {
        match kind {
            Criterion::D => self.quad_form(x, buf),
            Criterion::A => self.a_ratio(x, buf),
        }
    }
}

/// A model on a grid with the regressors `x(w_i)` cached per node.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    model: ModelSpec,
    grid: QuadratureGrid,
    regressors: Vec<f64>,
}

impl DesignProblem {
    pub fn new(model: ModelSpec, grid: QuadratureGrid) -> Result<Self> {
        if model.dimension() != grid.dimension() {
            return Err(Error::DimensionMismatch {
                expected: model.dimension(),
                got: grid.dimension(),
            });
        }
        let p = model.p();
        let mut regressors = vec![0.0; grid.len() * p];
        for (w, out) in grid.nodes().zip(regressors.chunks_exact_mut(p)) {
            model.eval_into(w, out)?;
        }
        Ok(Self {
            model,
            grid,
            regressors,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn p(&self) -> usize {
        self.model.p()
    }

    pub fn regressor(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.regressors[i * p..(i + 1) * p]
    }

    pub fn uniform_density(&self) -> DesignDensity {
        DesignDensity::uniform(&self.grid)
    }

    /// `M(f) = sum_i f_i mu_i x(w_i) x(w_i)^T`, accumulated in node order.
    pub fn info_matrix(&self, f: &DesignDensity) -> Result<InfoMatrix> {
        f.ensure_on(&self.grid)?;
        let p = self.p();
        let mut acc = vec![KahanSum::new(); p * (p + 1) / 2];
        for (i, (&fi, &mu)) in f.values().iter().zip(self.grid.measures()).enumerate() {
            if fi == 0.0 {
                continue;
            }
            let w = fi * mu;
            let x = self.regressor(i);
            let mut k = 0;
            for a in 0..p {
                let wx = w * x[a];
                for b in a..p {
                    acc[k].add(wx * x[b]);
                    k += 1;
                }
            }
        }
        let mut m = vec![0.0; p * p];
        let mut k = 0;
        for a in 0..p {
            for b in a..p {
                let v = acc[k].value();
                m[a * p + b] = v;
                m[b * p + a] = v;
                k += 1;
            }
        }
        InfoMatrix::from_row_major(p, m)
    }

    /// Sensitivity of `kind` at every node for a given information matrix.
    pub fn sensitivities(&self, kind: Criterion, info: &InfoMatrix) -> Vec<f64> {
        let p = self.p();
        let n = self.grid.len();
        if n < PAR_MIN_NODES {
            let mut buf = vec![0.0; p];
            return self
                .regressors
                .chunks_exact(p)
                .map(|x| info.sensitivity(kind, x, &mut buf))
                .collect();
        }
        let mut out = Vec::with_capacity(n);
        self.regressors
            .par_chunks_exact(p)
            .with_min_len(512)
            .map_init(|| vec![0.0; p], |buf, x| info.sensitivity(kind, x, buf))
            .collect_into_vec(&mut out);
        out
    }

    /// `phi_i = x_i^T M(f)^{-1} x_i`.
    pub fn d_sensitivity(&self, f: &DesignDensity) -> Result<Vec<f64>> {
        let info = self.info_matrix(f)?;
        Ok(self.sensitivities(Criterion::D, &info))
    }

    /// `psi_i = ||M(f)^{-1} x_i||^2 / tr(M(f)^{-1})`.
    pub fn a_sensitivity(&self, f: &DesignDensity) -> Result<Vec<f64>> {
        let info = self.info_matrix(f)?;
        Ok(self.sensitivities(Criterion::A, &info))
    }

    /// `-log det M(f)` for D, `tr M(f)^{-1}` for A; both minimized.
    pub fn criterion_value(&self, kind: Criterion, f: &DesignDensity) -> Result<f64> {
        Ok(self.info_matrix(f)?.criterion_value(kind))
    }

    /// `sum_i f_i mu_i s_i`.
    pub fn integrate(&self, f: &DesignDensity, s: &[f64]) -> f64 {
        compensated_sum(
            f.values()
                .iter()
                .zip(self.grid.measures())
                .zip(s)
                .map(|((fi, mu), si)| fi * mu * si),
        )
    }
}

/// Free-function form of [`DesignProblem::info_matrix`].
pub fn info_matrix(
    f: &DesignDensity,
    grid: &QuadratureGrid,
    model: &ModelSpec,
) -> Result<InfoMatrix> {
    DesignProblem::new(model.clone(), grid.clone())?.info_matrix(f)
}

pub fn uniform_density(grid: &QuadratureGrid) -> DesignDensity {
    DesignDensity::uniform(grid)
}
