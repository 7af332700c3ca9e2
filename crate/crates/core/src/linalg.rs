//! Small dense helpers: compensated summation and triangular solves on a
//! row-major lower Cholesky factor.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums in index order with compensation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

/// Solves `L y = x` in place, `l` row-major `p x p` lower triangular.
#[inline]
pub(crate) fn forward_solve(l: &[f64], p: usize, y: &mut [f64]) {
    for i in 0..p {
        let row = &l[i * p..i * p + i];
        let mut s = y[i];
        for (lij, yj) in row.iter().zip(y.iter()) {
            s -= lij * yj;
        }
        y[i] = s / l[i * p + i];
    }
}

/// Solves `L^T z = y` in place.
#[inline]
pub(crate) fn backward_solve(l: &[f64], p: usize, z: &mut [f64]) {
    for i in (0..p).rev() {
        let mut s = z[i];
        for j in i + 1..p {
            s -= l[j * p + i] * z[j];
        }
        z[i] = s / l[i * p + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let xs = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(xs) - 4e-16).abs() < 1e-30);
        let naive: f64 = xs.iter().sum();
        assert_ne!(naive, 4e-16);
    }

    #[test]
    fn triangular_solves_invert_a_known_factor() {
        // M = L L^T with L = [[2,0],[1,3]] -> M = [[4,2],[2,10]]
        let l = [2.0, 0.0, 1.0, 3.0];
        let mut v = [4.0, 2.0]; // M e1
        forward_solve(&l, 2, &mut v);
        backward_solve(&l, 2, &mut v);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }
}
