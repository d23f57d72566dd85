//! Banded linear solve without pivoting, for M-matrices arising from
//! absorbing Markov chains (`I - P` restricted to transient states).

use alloc::vec;
use alloc::vec::Vec;

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    // Row i stores columns i - lower ..= i + upper + lower (room for fill-in).
    data: Vec<f64>,
    width: usize,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self { n, lower, upper, data: vec![0.0; n * width], width }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let offset = j as isize - i as isize + self.lower as isize;
        if offset < 0 || offset as usize >= self.width || j >= self.n {
            None
        } else {
            Some(i * self.width + offset as usize)
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band"));
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Solves `A x = b` in place by Gaussian elimination without pivoting.
    /// Returns `None` on a zero pivot.
    pub fn solve(mut self, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = self.n;
        let reach = self.upper + self.lower;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            let last_row = (k + self.lower).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            for i in k + 1..=last_row {
                let factor = self.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..=last_col {
                    let akj = self.get(k, j);
                    if akj != 0.0 {
                        let s = self.slot(i, j).expect("fill-in stays within band");
                        self.data[s] -= factor * akj;
                    }
                }
                b[i] -= factor * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=last_col {
                acc -= self.get(k, j) * x[j];
            }
            x[k] = acc / self.get(k, k);
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_system() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1, 0, 1] -> x = [1, 1, 1]
        let mut m = BandedMatrix::zeros(3, 1, 1);
        for i in 0..3 {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i < 2 {
                m.add(i, i + 1, -1.0);
            }
        }
        let x = m.solve(vec![1.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
