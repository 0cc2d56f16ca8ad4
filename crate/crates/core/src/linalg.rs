//! Small dense linear algebra with partial pivoting.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// LU factorisation with partial pivoting, in place.
    fn lu(&self) -> (Vec<f64>, Vec<usize>, f64) {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let d = a[k * n + k];
            if d == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let m = a[i * n + k] / d;
                a[i * n + k] = m;
                for j in (k + 1)..n {
                    a[i * n + j] -= m * a[k * n + j];
                }
            }
        }
        (a, perm, sign)
    }

    pub fn determinant(&self) -> f64 {
        let (a, _, sign) = self.lu();
        (0..self.n).fold(sign, |acc, k| acc * a[k * self.n + k])
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let (a, perm, _) = self.lu();
        if (0..n).any(|k| a[k * n + k] == 0.0 || !a[k * n + k].is_finite()) {
            return Err(Error::Singular);
        }
        let mut y: Vec<f64> = perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= a[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                y[i] -= a[i * n + j] * y[j];
            }
            y[i] /= a[i * n + i];
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_of_permutation() {
        let m = Matrix::from_fn(3, |i, j| if (i + 1) % 3 == j { 1.0 } else { 0.0 });
        assert_eq!(m.determinant(), 1.0);
        let swap = Matrix::from_fn(2, |i, j| if i != j { 1.0 } else { 0.0 });
        assert_eq!(swap.determinant(), -1.0);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let m = Matrix::from_fn(3, |i, j| 1.0 / (i + j + 1) as f64);
        let x = [1.0, -2.0, 3.0];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| m.get(i, j) * x[j]).sum())
            .collect();
        let got = m.solve(&b).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_is_reported() {
        let m = Matrix::from_fn(2, |_, _| 1.0);
        assert_eq!(m.solve(&[1.0, 2.0]), Err(Error::Singular));
    }
}
