//! Polynomial regression models `y(w) = x(w)^T beta + eps`, with the
//! regressor map `x(w)` given as an ordered list of monomials.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions above this still work but grids grow quickly; a warning is logged.
pub const RECOMMENDED_MAX_DIMENSION: usize = 4;

/// A monomial `prod_j w_j^{e_j}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MonomialTerm {
    exponents: Vec<u32>,
}

impl MonomialTerm {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// `0^0` is 1.
    #[inline]
    pub fn eval(&self, w: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(w)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl fmt::Display for MonomialTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut factors = Vec::new();
        for (j, &e) in self.exponents.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(format!("w{}", j + 1)),
                _ => factors.push(format!("w{}^{}", j + 1, e)),
            }
        }
        if factors.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", factors.join("*"))
        }
    }
}

/// Ordered monomial basis in `dimension` variables; `p()` is the number of terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    dimension: usize,
    terms: Vec<MonomialTerm>,
}

impl ModelSpec {
    /// Builds a model from an explicit term list. Terms must be distinct,
    /// non-empty, and all of length `dimension`.
    pub fn new(dimension: usize, terms: Vec<MonomialTerm>) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::DimensionOutOfRange(dimension));
        }
        if terms.is_empty() {
            return Err(Error::InvalidModel("model needs at least one term".into()));
        }
        let mut seen = HashSet::with_capacity(terms.len());
        for t in &terms {
            if t.exponents.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: t.exponents.len(),
                });
            }
            if !seen.insert(t) {
                return Err(Error::InvalidModel(format!("duplicate term {t}")));
            }
        }
        if dimension > RECOMMENDED_MAX_DIMENSION {
            log::warn!(
                "model dimension {dimension} exceeds {RECOMMENDED_MAX_DIMENSION}; \
                 tensor grids grow as n^d"
            );
        }
        Ok(Self { dimension, terms })
    }

    pub fn from_exponents(dimension: usize, exponents: Vec<Vec<u32>>) -> Result<Self> {
        Self::new(dimension, exponents.into_iter().map(MonomialTerm::new).collect())
    }

    /// All monomials of total degree at most 2: the constant, the linear terms
    /// in index order, then `w_i w_j` for `i <= j` in graded-lex order.
    ///
    /// For `d = 2` this is `(1, w1, w2, w1^2, w1 w2, w2^2)`.
    pub fn full_quadratic(dimension: usize) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::DimensionOutOfRange(dimension));
        }
        let d = dimension;
        let unit = |j: usize| {
            let mut e = vec![0u32; d];
            e[j] += 1;
            e
        };
        let mut terms = vec![MonomialTerm::new(vec![0; d])];
        terms.extend((0..d).map(|j| MonomialTerm::new(unit(j))));
        for i in 0..d {
            for j in i..d {
                let mut e = unit(i);
                e[j] += 1;
                terms.push(MonomialTerm::new(e));
            }
        }
        Self::new(d, terms)
    }

    /// `(w1, ..., wd)` with no intercept.
    pub fn linear_no_intercept(dimension: usize) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::DimensionOutOfRange(dimension));
        }
        let terms = (0..dimension)
            .map(|j| {
                let mut e = vec![0u32; dimension];
                e[j] = 1;
                MonomialTerm::new(e)
            })
            .collect();
        Self::new(dimension, terms)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn p(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn eval_regressor(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.p()];
        self.eval_into(w, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        if w.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: w.len(),
            });
        }
        if out.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                got: out.len(),
            });
        }
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.eval(w);
        }
        Ok(())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "x(w) = ({})", names.join(", "))
    }
}
