//! Equivalence-theorem certificates and support-point extraction.
//!
//! A density `f` is optimal on the grid iff its sensitivity never exceeds
//! the bound (`p` for D, 1 for A). The certificate reports the excess. Since
//! `sum f mu phi = p` (resp. `sum f mu psi = 1`), the maximum is always at
//! least the bound, so the gap is nonnegative up to roundoff.
//!
//! Certificates are grid-relative: they bound suboptimality over the grid
//! nodes, not over the continuous region.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::design::{Criterion, DesignDensity, DesignProblem, InfoMatrix};
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, KahanSum};
use crate::solver::{solve, MonotonicityAction, SolveOptions, SolveReport};
use crate::space::{GridLayout, QuadratureGrid};

pub const DEFAULT_MASS_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub criterion: Criterion,
    /// `sensitivity_max - bound`.
    pub gap: f64,
    pub argmax_index: usize,
    pub argmax_node: Vec<f64>,
    pub bound: f64,
    pub sensitivity_max: f64,
}

/// Certificate of `f` over the nodes of `problem`'s grid.
pub fn certify(
    problem: &DesignProblem,
    f: &DesignDensity,
    criterion: Criterion,
) -> Result<Certificate> {
    let info = problem.info_matrix(f)?;
    Ok(certify_info(problem, &info, criterion))
}

/// Certificate for an arbitrary information matrix, evaluated at the nodes
/// of `problem`'s grid.
pub fn certify_info(problem: &DesignProblem, info: &InfoMatrix, criterion: Criterion) -> Certificate {
    let s = problem.sensitivities(criterion, info);
    let (idx, max) = s
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let bound = criterion.bound(problem.p());
    Certificate {
        criterion,
        gap: max - bound,
        argmax_index: idx,
        argmax_node: problem.grid().node(idx).to_vec(),
        bound,
        sensitivity_max: max,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    /// Mass-weighted centroid of the cluster.
    pub location: Vec<f64>,
    /// Integrated `f mu` over the cluster.
    pub weight: f64,
    pub n_cells: usize,
    pub peak_density: f64,
    /// Node of the heaviest cell in the cluster.
    pub peak_location: Vec<f64>,
    pub peak_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    /// Sorted by descending weight.
    pub points: Vec<SupportPoint>,
    /// `1 - sum of weights`: mass of the cells below the floor, plus any
    /// normalization error of the input.
    pub residual_mass: f64,
}

impl Support {
    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.points.iter().map(|s| s.weight))
    }
}

/// Groups cells with `f_i mu_i >= mass_floor * max_j f_j mu_j` into
/// connected components under grid adjacency; each component is one
/// support point.
pub fn extract_support(
    grid: &QuadratureGrid,
    f: &DesignDensity,
    mass_floor: f64,
) -> Result<Support> {
    f.ensure_on(grid)?;
    let masses = f.masses(grid);
    let max = masses.iter().copied().fold(0.0, f64::max);
    let threshold = mass_floor * max;
    let active: Vec<bool> = masses.iter().map(|&m| m > 0.0 && m >= threshold).collect();

    let d = grid.dimension();
    let mut label = vec![usize::MAX; grid.len()];
    let mut points = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..grid.len() {
        if !active[seed] || label[seed] != usize::MAX {
            continue;
        }
        let id = points.len();
        label[seed] = id;
        queue.push_back(seed);
        let mut cells = Vec::new();
        while let Some(i) = queue.pop_front() {
            cells.push(i);
            for &j in grid.neighbors(i) {
                if active[j] && label[j] == usize::MAX {
                    label[j] = id;
                    queue.push_back(j);
                }
            }
        }
        // fixed summation order regardless of discovery order
        cells.sort_unstable();
        let mut weight = KahanSum::new();
        let mut centroid = vec![KahanSum::new(); d];
        let mut peak = cells[0];
        for &i in &cells {
            weight.add(masses[i]);
            for (c, x) in centroid.iter_mut().zip(grid.node(i)) {
                c.add(masses[i] * x);
            }
            if masses[i] > masses[peak] {
                peak = i;
            }
        }
        let weight = weight.value();
        points.push(SupportPoint {
            location: centroid.iter().map(|c| c.value() / weight).collect(),
            weight,
            n_cells: cells.len(),
            peak_density: cells
                .iter()
                .map(|&i| f.values()[i])
                .fold(0.0, f64::max),
            peak_location: grid.node(peak).to_vec(),
            peak_index: peak,
        });
    }
    points.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then_with(|| cmp_points(&a.location, &b.location))
    });
    let residual_mass = 1.0 - compensated_sum(points.iter().map(|s| s.weight));
    Ok(Support {
        points,
        residual_mass,
    })
}

fn cmp_points(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Fills `report.support` from its final density.
pub fn attach_support(report: &mut SolveReport, grid: &QuadratureGrid, mass_floor: f64) -> Result<()> {
    report.support = extract_support(grid, &report.final_density, mass_floor)?.points;
    Ok(())
}

fn polar_shape(grid: &QuadratureGrid) -> Result<(usize, usize)> {
    match grid.layout() {
        GridLayout::Polar { n_r, n_theta, .. } => Ok((*n_r, *n_theta)),
        _ => Err(Error::NotPolarGrid),
    }
}

/// Mass per radial band of a polar grid, innermost first.
pub fn radial_band_masses(grid: &QuadratureGrid, f: &DesignDensity) -> Result<Vec<f64>> {
    f.ensure_on(grid)?;
    let (n_r, n_theta) = polar_shape(grid)?;
    let masses = f.masses(grid);
    Ok((0..n_r)
        .map(|k| compensated_sum(masses[k * n_theta..(k + 1) * n_theta].iter().copied()))
        .collect())
}

/// Maximum relative deviation of sector masses from their mean on the
/// outermost radial band that carries at least 1% of the mass.
///
/// Sector boundaries need not align with cells; a cell straddling two
/// sectors is split in proportion to its angular overlap.
pub fn ring_uniformity(grid: &QuadratureGrid, f: &DesignDensity, n_sectors: usize) -> Result<f64> {
    let (n_r, n_theta) = polar_shape(grid)?;
    if n_sectors == 0 {
        return Err(Error::InvalidOptions("n_sectors must be >= 1".into()));
    }
    let bands = radial_band_masses(grid, f)?;
    let total = compensated_sum(bands.iter().copied());
    let Some(k) = (0..n_r).rev().find(|&k| bands[k] >= 0.01 * total) else {
        return Err(Error::DegenerateRing(bands[n_r - 1] / total));
    };
    let masses = f.masses(grid);
    // cell l spans [l S, (l+1) S), sector s spans [s T, (s+1) T) in units of
    // 2 pi / (T S), with T = n_theta and S = n_sectors
    let (t, s) = (n_theta, n_sectors);
    let mut sectors = vec![KahanSum::new(); s];
    for l in 0..n_theta {
        let m = masses[k * n_theta + l];
        let (lo, hi) = (l * s, (l + 1) * s);
        let first = lo / t;
        let last = (hi - 1) / t;
        for (sec, acc) in sectors.iter_mut().enumerate().take(last + 1).skip(first) {
            let overlap = hi.min((sec + 1) * t) - lo.max(sec * t);
            acc.add(m * overlap as f64 / s as f64);
        }
    }
    let sectors: Vec<f64> = sectors.iter().map(|a| a.value()).collect();
    let mean = compensated_sum(sectors.iter().copied()) / s as f64;
    Ok(sectors
        .iter()
        .map(|v| (v - mean).abs() / mean)
        .fold(0.0, f64::max))
}

/// Finite design obtained by re-solving for the weights on the peak
/// locations of extracted support points.
#[derive(Debug, Clone)]
pub struct RefinedDesign {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Gap over the finite support itself.
    pub support_gap: f64,
    /// Certificate of the finite design evaluated over the full grid.
    pub grid_certificate: Certificate,
    pub criterion_value: f64,
    pub iterations: usize,
}

/// Runs the multiplicative algorithm on the finite design space formed by
/// the support points' peak locations, starting from equal weights.
///
/// When the optimal information matrix is attained by more than one weight
/// vector on the same support, the grid density converges to one of them
/// depending on the cell layout; this gives the one reached from equal
/// weights on the atoms. Errors with `SingularInformation` if the peaks do
/// not support a nonsingular design (e.g. a ring cluster collapsed to one
/// point).
pub fn refine_support_weights(
    problem: &DesignProblem,
    support: &[SupportPoint],
    criterion: Criterion,
    cert_tol: f64,
    max_iters: usize,
) -> Result<RefinedDesign> {
    if support.is_empty() {
        return Err(Error::InvalidDensity("no support points to refine".into()));
    }
    let d = problem.grid().dimension();
    let k = support.len();
    let nodes: Vec<f64> = support.iter().flat_map(|s| s.peak_location.iter().copied()).collect();
    let atoms = QuadratureGrid::scattered(d, nodes, vec![1.0 / k as f64; k])?;
    let atom_problem = DesignProblem::new(problem.model().clone(), atoms)?;
    let opts = SolveOptions::new(criterion)
        .cert_tol(cert_tol)
        .l1_tol(1e-300)
        .max_iters(max_iters)
        .record_history(false)
        .monotonicity_action(MonotonicityAction::Warn);
    let rep = solve(&atom_problem, &opts)?;
    let info = atom_problem.info_matrix(&rep.final_density)?;
    Ok(RefinedDesign {
        points: support.iter().map(|s| s.peak_location.clone()).collect(),
        weights: rep.final_density.masses(atom_problem.grid()),
        support_gap: rep.final_gap,
        grid_certificate: certify_info(problem, &info, criterion),
        criterion_value: info.criterion_value(criterion),
        iterations: rep.iterations,
    })
}
