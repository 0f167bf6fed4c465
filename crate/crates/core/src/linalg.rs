//! Small dense solvers for the explainers' regression systems.

use alloc::vec::Vec;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: alloc::vec![0.0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    /// Adds `weight * u u^T`.
    pub fn add_outer(&mut self, u: &[f64], weight: f64) {
        for (r, ur) in u.iter().enumerate() {
            if *ur == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.n..(r + 1) * self.n];
            for (cell, uc) in row.iter_mut().zip(u) {
                *cell += weight * ur * uc;
            }
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Cholesky solve of `A x = b`; `None` if `A` is not numerically positive definite.
    pub fn solve_spd(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let scale = self.trace().abs().max(f64::MIN_POSITIVE) / n.max(1) as f64;
        let mut l = alloc::vec![0.0; n * n];
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if diag.is_nan() || diag <= 1e-12 * scale {
                return None;
            }
            let diag = libm::sqrt(diag);
            l[j * n + j] = diag;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / diag;
            }
        }
        let mut y = alloc::vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = alloc::vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut a = SquareMatrix::zeros(2);
        a.add(0, 0, 4.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 3.0);
        let x = a.solve_spd(&[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn singular_is_none() {
        let mut a = SquareMatrix::zeros(2);
        a.add_outer(&[1.0, 1.0], 1.0);
        assert!(a.solve_spd(&[1.0, 1.0]).is_none());
    }
}
