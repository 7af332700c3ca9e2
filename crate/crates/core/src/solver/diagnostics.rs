//! Distances between consecutive iterates: the L1 step, the KL step and
//! the Pinsker bound linking them.

use crate::design::DesignDensity;
use crate::error::{Error, Result};
use crate::linalg::KahanSum;
use crate::space::QuadratureGrid;

/// Slack on `l1 <= sqrt(2 kl)`.
pub const PINSKER_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerCheck {
    pub l1: f64,
    pub kl: f64,
    pub holds: bool,
}

/// `h(r) = r ln r - r + 1 >= 0`, accurate near `r = 1`.
#[inline]
pub(crate) fn relative_entropy_term(r: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let t = r - 1.0;
    if t.abs() < 1e-2 {
        // sum_{k>=2} (-1)^k t^k / (k (k-1))
        let mut term = t * t;
        let mut acc = 0.0;
        for k in 2..12 {
            let kf = k as f64;
            acc += term / (kf * (kf - 1.0));
            term *= -t;
        }
        acc
    } else {
        r * r.ln() - t
    }
}

/// L1 distance and KL divergence `int f_new log(f_new / f_old)` by
/// quadrature, with `0 log 0 = 0`.
///
/// The KL sum is evaluated as `sum mu f_old h(f_new / f_old)`, a sum of
/// nonnegative terms that equals the KL divergence when both densities
/// integrate to one.
pub fn pinsker_check(
    f_new: &DesignDensity,
    f_old: &DesignDensity,
    grid: &QuadratureGrid,
) -> Result<PinskerCheck> {
    f_new.ensure_on(grid)?;
    f_old.ensure_on(grid)?;
    step_distances(f_new.values(), f_old.values(), grid.measures())
}

pub(crate) fn step_distances(new: &[f64], old: &[f64], mu: &[f64]) -> Result<PinskerCheck> {
    let mut l1 = KahanSum::new();
    let mut kl = KahanSum::new();
    for (i, ((&a, &b), &m)) in new.iter().zip(old).zip(mu).enumerate() {
        if b == 0.0 {
            if a > 0.0 {
                return Err(Error::KlUndefined(i));
            }
            continue;
        }
        l1.add((a - b).abs() * m);
        kl.add(b * m * relative_entropy_term(a / b));
    }
    let l1 = l1.value();
    let kl = kl.value().max(0.0);
    Ok(PinskerCheck {
        l1,
        kl,
        holds: l1 <= (2.0 * kl).sqrt() + PINSKER_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::grid_box;

    #[test]
    fn entropy_term_matches_closed_form() {
        for r in [0.0, 1e-300, 0.3, 0.985, 0.999, 1.0, 1.001, 1.02, 3.0] {
            let exact = if r == 0.0 { 1.0 } else { r * f64::ln(r) - r + 1.0 };
            let got = relative_entropy_term(r);
            assert!((got - exact).abs() <= 1e-15 + 1e-12 * exact, "r = {r}");
            assert!(got >= 0.0);
        }
        // cancellation regime: h(1 + t) ~ t^2 / 2
        let t: f64 = 1e-9;
        assert!((relative_entropy_term(1.0 + t) / (t * t / 2.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn identical_densities() {
        let g = grid_box(&[[0.0, 1.0]], 8).unwrap();
        let f = DesignDensity::uniform(&g);
        let c = pinsker_check(&f, &f, &g).unwrap();
        assert_eq!((c.l1, c.kl, c.holds), (0.0, 0.0, true));
    }

    #[test]
    fn mass_appearing_on_a_dead_cell_is_an_error() {
        let g = grid_box(&[[0.0, 1.0]], 4).unwrap();
        let old = DesignDensity::new(&g, vec![2.0, 2.0, 0.0, 0.0]).unwrap();
        let new = DesignDensity::uniform(&g);
        assert!(matches!(
            pinsker_check(&new, &old, &g),
            Err(Error::KlUndefined(2))
        ));
        // the reverse direction is fine: 0 log 0 = 0
        let c = pinsker_check(&old, &new, &g).unwrap();
        assert!((c.kl - 2f64.ln()).abs() < 1e-15);
        assert!((c.l1 - 1.0).abs() < 1e-15);
        assert!(c.holds);
    }

    #[test]
    fn quadratic_reweighting_of_the_uniform() {
        // old = 1/2 on [-1,1], new = (1 + 3w^2) / 4, the first D-step of the
        // {1, w} model. Oracle: direct 10^6-cell midpoint sums, independent of
        // pinsker_check.
        let n = 4000;
        let g = grid_box(&[[-1.0, 1.0]], n).unwrap();
        let old = DesignDensity::uniform(&g);
        let new = DesignDensity::normalized(
            &g,
            g.nodes().map(|w| (1.0 + 3.0 * w[0] * w[0]) / 4.0).collect(),
        )
        .unwrap();
        let c = pinsker_check(&new, &old, &g).unwrap();

        let fine = 1_000_000;
        let h = 2.0 / fine as f64;
        let (mut l1, mut kl) = (0.0, 0.0);
        for k in 0..fine {
            let w = -1.0 + (k as f64 + 0.5) * h;
            let a = (1.0 + 3.0 * w * w) / 4.0;
            l1 += (a - 0.5).abs() * h;
            kl += a * (a / 0.5).ln() * h;
        }
        assert!((c.l1 - l1).abs() < 1e-5, "{} vs {}", c.l1, l1);
        assert!((c.kl - kl).abs() < 1e-5, "{} vs {}", c.kl, kl);
        // closed form of the L1 distance: 2 / (3 sqrt 3)
        assert!((l1 - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-6);
        assert!(c.holds);
        assert!(c.l1 <= (2.0 * c.kl).sqrt());
    }
}
