//! Design regions and the positive-weight quadrature grids that discretize
//! them. Every integral over the region is evaluated as `sum_i g(w_i) mu_i`.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// A continuous design region.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Product of closed intervals `[a_j, b_j]`.
    Box { intervals: Vec<[f64; 2]> },
    /// Closed disc in the plane.
    Disc { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Box { intervals } => {
                if intervals.is_empty() {
                    return Err(Error::InvalidRegion("box needs at least one interval".into()));
                }
                for (j, [a, b]) in intervals.iter().enumerate() {
                    if !(a.is_finite() && b.is_finite() && a < b) {
                        return Err(Error::InvalidRegion(format!(
                            "interval {j} = [{a}, {b}] must satisfy a < b"
                        )));
                    }
                }
                Ok(())
            }
            Region::Disc { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidRegion(format!("radius {radius} must be > 0")));
                }
                if !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidRegion("disc center must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Region::Box { intervals } => intervals.len(),
            Region::Disc { .. } => 2,
        }
    }

    /// Box: `prod (b_j - a_j)`; disc: `pi r^2`.
    pub fn volume(&self) -> f64 {
        match self {
            Region::Box { intervals } => intervals.iter().map(|[a, b]| b - a).product(),
            Region::Disc { radius, .. } => PI * radius * radius,
        }
    }

    /// True if `w` lies in the region up to `tol`.
    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        match self {
            Region::Box { intervals } => intervals
                .iter()
                .zip(w)
                .all(|([a, b], x)| *x >= a - tol && *x <= b + tol),
            Region::Disc { center, radius } => {
                let dx = w[0] - center[0];
                let dy = w[1] - center[1];
                (dx * dx + dy * dy).sqrt() <= radius + tol
            }
        }
    }
}

pub fn region_volume(region: &Region) -> f64 {
    region.volume()
}

/// Node placement for tensor grids on boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxRule {
    /// Cell-centered nodes, equal cell volumes.
    #[default]
    Midpoint,
    /// Equispaced nodes including both endpoints, trapezoid weights
    /// (half cells on each face).
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLimits {
    pub node_cap: usize,
}

impl Default for GridLimits {
    fn default() -> Self {
        Self {
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

/// How the nodes of a grid are arranged; used for adjacency and for the
/// polar ring diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum GridLayout {
    Tensor {
        n_per_dim: usize,
        rule: BoxRule,
    },
    /// Node `(k, l)` sits at index `k * n_theta + l`, `k` radial.
    Polar {
        center: [f64; 2],
        radius: f64,
        n_r: usize,
        n_theta: usize,
    },
    /// Arbitrary nodes without neighbor structure.
    Scattered,
}

/// Identity of a grid, derived from its nodes and measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridId(u64);

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    id: GridId,
    dimension: usize,
    nodes: Vec<f64>,
    measures: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
    total_measure: f64,
    layout: GridLayout,
}

impl QuadratureGrid {
    /// Builds a grid from raw parts. `nodes` is row-major `len x dimension`.
    pub fn from_parts(
        dimension: usize,
        nodes: Vec<f64>,
        measures: Vec<f64>,
        adjacency: Vec<Vec<usize>>,
        layout: GridLayout,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::DimensionOutOfRange(0));
        }
        let n = measures.len();
        if n == 0 {
            return Err(Error::GridTooSmall("grid has no nodes".into()));
        }
        if nodes.len() != n * dimension {
            return Err(Error::DimensionMismatch {
                expected: n * dimension,
                got: nodes.len(),
            });
        }
        if adjacency.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: adjacency.len(),
            });
        }
        if let Some(i) = measures.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidRegion(format!(
                "cell {i} has non-positive measure {}",
                measures[i]
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRegion("non-finite node coordinate".into()));
        }
        let total_measure = crate::linalg::compensated_sum(measures.iter().copied());
        let mut h = DefaultHasher::new();
        dimension.hash(&mut h);
        for x in nodes.iter().chain(&measures) {
            x.to_bits().hash(&mut h);
        }
        Ok(Self {
            id: GridId(h.finish()),
            dimension,
            nodes,
            measures,
            adjacency,
            total_measure,
            layout,
        })
    }

    /// Finite set of points with given measures and no adjacency.
    pub fn scattered(dimension: usize, nodes: Vec<f64>, measures: Vec<f64>) -> Result<Self> {
        let n = measures.len();
        Self::from_parts(dimension, nodes, measures, vec![Vec::new(); n], GridLayout::Scattered)
    }

    pub fn id(&self) -> GridId {
        self.id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dimension)
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    /// Midpoint-rule quadrature of `g`.
    pub fn integrate(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        crate::linalg::compensated_sum(self.nodes().zip(&self.measures).map(|(w, m)| g(w) * m))
    }
}

/// Cell-centered tensor grid on a box with the default node cap.
pub fn grid_box(intervals: &[[f64; 2]], n_per_dim: usize) -> Result<QuadratureGrid> {
    grid_box_with(intervals, n_per_dim, BoxRule::Midpoint, GridLimits::default())
}

pub fn grid_box_with(
    intervals: &[[f64; 2]],
    n_per_dim: usize,
    rule: BoxRule,
    limits: GridLimits,
) -> Result<QuadratureGrid> {
    Region::Box {
        intervals: intervals.to_vec(),
    }
    .validate()?;
    if n_per_dim < 2 {
        return Err(Error::GridTooSmall(format!(
            "n_per_dim = {n_per_dim}, need at least 2"
        )));
    }
    let d = intervals.len();
    let total = n_per_dim
        .checked_pow(d as u32)
        .filter(|&t| t <= limits.node_cap)
        .ok_or(Error::GridTooLarge {
            nodes: n_per_dim.saturating_pow(d as u32),
            cap: limits.node_cap,
        })?;

    // 1-D nodes and weights per axis. Node positions are computed as
    // center + half_width * t with t antisymmetric in the index, so the grid
    // is exactly mirror-symmetric about the box center.
    let n = n_per_dim;
    let axes: Vec<(Vec<f64>, Vec<f64>)> = intervals
        .iter()
        .map(|&[a, b]| {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            match rule {
                BoxRule::Midpoint => {
                    let x = (0..n)
                        .map(|k| c + h * ((2 * k + 1) as f64 - n as f64) / n as f64)
                        .collect();
                    (x, vec![(b - a) / n as f64; n])
                }
                BoxRule::Closed => {
                    let m = (n - 1) as f64;
                    let x = (0..n)
                        .map(|k| c + h * ((2 * k) as f64 - m) / m)
                        .collect();
                    let step = (b - a) / m;
                    let mut w = vec![step; n];
                    w[0] = 0.5 * step;
                    w[n - 1] = 0.5 * step;
                    (x, w)
                }
            }
        })
        .collect();

    let mut nodes = Vec::with_capacity(total * d);
    let mut measures = Vec::with_capacity(total);
    let mut adjacency = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let strides: Vec<usize> = (0..d).map(|j| n.pow((d - 1 - j) as u32)).collect();
    for flat in 0..total {
        // last axis varies fastest
        let mut rem = flat;
        for j in 0..d {
            idx[j] = rem / strides[j];
            rem %= strides[j];
        }
        let mut mu = 1.0;
        for j in 0..d {
            nodes.push(axes[j].0[idx[j]]);
            mu *= axes[j].1[idx[j]];
        }
        measures.push(mu);
        let mut adj = Vec::with_capacity(2 * d);
        for j in 0..d {
            if idx[j] > 0 {
                adj.push(flat - strides[j]);
            }
            if idx[j] + 1 < n {
                adj.push(flat + strides[j]);
            }
        }
        adj.sort_unstable();
        adjacency.push(adj);
    }
    QuadratureGrid::from_parts(
        d,
        nodes,
        measures,
        adjacency,
        GridLayout::Tensor { n_per_dim, rule },
    )
}

/// Polar midpoint grid on a disc with the default node cap.
pub fn grid_disc(
    center: [f64; 2],
    radius: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<QuadratureGrid> {
    grid_disc_with(center, radius, n_r, n_theta, GridLimits::default())
}

pub fn grid_disc_with(
    center: [f64; 2],
    radius: f64,
    n_r: usize,
    n_theta: usize,
    limits: GridLimits,
) -> Result<QuadratureGrid> {
    Region::Disc { center, radius }.validate()?;
    if n_r < 2 || n_theta < 4 {
        return Err(Error::GridTooSmall(format!(
            "n_r = {n_r}, n_theta = {n_theta}; need n_r >= 2 and n_theta >= 4"
        )));
    }
    let total = n_r.checked_mul(n_theta).filter(|&t| t <= limits.node_cap).ok_or(
        Error::GridTooLarge {
            nodes: n_r.saturating_mul(n_theta),
            cap: limits.node_cap,
        },
    )?;
    let dr = radius / n_r as f64;
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut nodes = Vec::with_capacity(2 * total);
    let mut measures = Vec::with_capacity(total);
    let mut adjacency = Vec::with_capacity(total);
    for k in 0..n_r {
        let r = (k as f64 + 0.5) * dr;
        for l in 0..n_theta {
            let theta = (l as f64 + 0.5) * dtheta;
            nodes.push(center[0] + r * theta.cos());
            nodes.push(center[1] + r * theta.sin());
            measures.push(r * dr * dtheta);
            let mut adj = Vec::with_capacity(4);
            if k > 0 {
                adj.push((k - 1) * n_theta + l);
            }
            if k + 1 < n_r {
                adj.push((k + 1) * n_theta + l);
            }
            adj.push(k * n_theta + (l + n_theta - 1) % n_theta);
            adj.push(k * n_theta + (l + 1) % n_theta);
            adj.sort_unstable();
            adj.dedup();
            adjacency.push(adj);
        }
    }
    QuadratureGrid::from_parts(
        2,
        nodes,
        measures,
        adjacency,
        GridLayout::Polar {
            center,
            radius,
            n_r,
            n_theta,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_symmetric_adjacency(g: &QuadratureGrid) {
        for i in 0..g.len() {
            for &j in g.neighbors(i) {
                assert!(g.neighbors(j).contains(&i), "{i} -> {j} not mirrored");
            }
        }
    }

    #[test]
    fn two_by_two_square() {
        let g = grid_box(&[[-1.0, 1.0], [-1.0, 1.0]], 2).unwrap();
        assert_eq!(g.len(), 4);
        let pts: Vec<Vec<f64>> = g.nodes().map(|w| w.to_vec()).collect();
        assert_eq!(
            pts,
            vec![
                vec![-0.5, -0.5],
                vec![-0.5, 0.5],
                vec![0.5, -0.5],
                vec![0.5, 0.5]
            ]
        );
        assert!(g.measures().iter().all(|&m| m == 1.0));
        assert_symmetric_adjacency(&g);
    }

    #[test]
    fn square_41_has_area_four() {
        let g = grid_box(&[[-1.0, 1.0], [-1.0, 1.0]], 41).unwrap();
        assert_eq!(g.len(), 1681);
        assert!((g.total_measure() - 4.0).abs() < 1e-12);
        assert_symmetric_adjacency(&g);
    }

    #[test]
    fn unit_interval_cell_centers() {
        let g = grid_box(&[[0.0, 1.0]], 4).unwrap();
        let xs: Vec<f64> = g.nodes().map(|w| w[0]).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(g.measures().iter().all(|&m| m == 0.25));
    }

    #[test]
    fn closed_rule_hits_the_faces() {
        let g = grid_box_with(
            &[[-1.0, 1.0], [-1.0, 1.0]],
            41,
            BoxRule::Closed,
            GridLimits::default(),
        )
        .unwrap();
        assert!((g.total_measure() - 4.0).abs() < 1e-12);
        assert_eq!(g.node(0), &[-1.0, -1.0]);
        assert_eq!(g.node(20 * 41 + 20), &[0.0, 0.0]);
        assert_eq!(g.node(1680), &[1.0, 1.0]);
        let h = 2.0 / 40.0;
        assert!((g.measures()[0] - h * h / 4.0).abs() < 1e-15);
        assert!((g.measures()[20] - h * h / 2.0).abs() < 1e-15);
        assert!((g.measures()[20 * 41 + 20] - h * h).abs() < 1e-15);
    }

    #[test]
    fn box_nodes_are_mirror_symmetric() {
        for rule in [BoxRule::Midpoint, BoxRule::Closed] {
            let g = grid_box_with(&[[-1.0, 1.0]], 21, rule, GridLimits::default()).unwrap();
            for i in 0..21 {
                assert_eq!(g.node(i)[0], -g.node(20 - i)[0]);
            }
        }
    }

    #[test]
    fn box_grid_errors() {
        assert!(matches!(
            grid_box(&[[-1.0, 1.0]], 1),
            Err(Error::GridTooSmall(_))
        ));
        assert!(matches!(
            grid_box(&[[1.0, -1.0]], 4),
            Err(Error::InvalidRegion(_))
        ));
        let limits = GridLimits { node_cap: 100 };
        assert!(matches!(
            grid_box_with(&[[0.0, 1.0]; 3], 5, BoxRule::Midpoint, limits),
            Err(Error::GridTooLarge { nodes: 125, cap: 100 })
        ));
        assert!(matches!(
            grid_box(&[[0.0, 1.0]; 4], 40),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn disc_measure_is_exact() {
        let g = grid_disc([0.0, 0.0], 1.0, 50, 120).unwrap();
        assert_eq!(g.len(), 6000);
        assert!((g.total_measure() / PI - 1.0).abs() < 1e-9);

        let g = grid_disc([0.0, 0.0], 1.0, 2, 4).unwrap();
        assert_eq!(g.len(), 8);
        // inner ring r = 1/4, outer r = 3/4; mu = r * (1/2) * (pi/2)
        assert!((g.measures()[0] - 0.25 * 0.5 * PI / 2.0).abs() < 1e-15);
        assert!((g.measures()[4] - 0.75 * 0.5 * PI / 2.0).abs() < 1e-15);
        assert!((g.total_measure() - PI).abs() < 1e-12);

        let g = grid_disc([0.3, -0.2], 2.0, 40, 64).unwrap();
        assert!((g.total_measure() / (4.0 * PI) - 1.0).abs() < 1e-12);
        assert_symmetric_adjacency(&g);
    }

    #[test]
    fn disc_nodes_lie_inside() {
        let region = Region::Disc {
            center: [0.3, -0.2],
            radius: 2.0,
        };
        let g = grid_disc([0.3, -0.2], 2.0, 10, 16).unwrap();
        assert!(g.nodes().all(|w| region.contains(w, 1e-12)));
    }

    #[test]
    fn disc_grid_errors() {
        assert!(matches!(
            grid_disc([0.0, 0.0], 1.0, 1, 8),
            Err(Error::GridTooSmall(_))
        ));
        assert!(matches!(
            grid_disc([0.0, 0.0], 1.0, 4, 3),
            Err(Error::GridTooSmall(_))
        ));
        assert!(matches!(
            grid_disc([0.0, 0.0], 0.0, 4, 8),
            Err(Error::InvalidRegion(_))
        ));
    }

    #[test]
    fn region_volumes() {
        let cube = Region::Box {
            intervals: vec![[-1.0, 1.0]; 3],
        };
        assert_eq!(region_volume(&cube), 8.0);
        let sq = Region::Box {
            intervals: vec![[-1.0, 1.0]; 2],
        };
        assert_eq!(region_volume(&sq), 4.0);
        let disc = Region::Disc {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(region_volume(&disc), PI);
    }

    #[test]
    fn refinement_converges_to_second_moment_of_disc() {
        // int_{unit disc} w1^2 = pi / 4
        let mut errs = Vec::new();
        for n in [10, 20, 40, 80] {
            let g = grid_disc([0.0, 0.0], 1.0, n, 2 * n).unwrap();
            errs.push((g.integrate(|w| w[0] * w[0]) - PI / 4.0).abs());
        }
        assert!(errs.windows(2).all(|e| e[1] < e[0]));
        assert!(errs[3] < 1e-4);
    }

    #[test]
    fn grid_id_tracks_contents() {
        let a = grid_box(&[[-1.0, 1.0]], 8).unwrap();
        let b = grid_box(&[[-1.0, 1.0]], 8).unwrap();
        let c = grid_box(&[[-1.0, 1.0]], 9).unwrap();
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), c.id());
    }
}
