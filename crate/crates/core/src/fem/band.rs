//! Symmetric banded storage and its Cholesky factorization.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower band of a symmetric matrix. Row `i` stores columns `i - bw ..= i`,
/// so both operands of the factorization's inner products are contiguous.
#[derive(Clone, Debug)]
pub struct BandMatrix<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to entry `(i, j)`; entries above the diagonal are ignored so
    /// full element matrices can be scattered without filtering.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        if j <= i {
            let k = self.idx(i, j);
            self.data[k] += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place `L Lᵀ` factorization. Fails on the first non-positive pivot.
    pub fn factorize(mut self) -> Result<BandCholesky<T>> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                // Columns shared by rows i and j that lie inside both bands.
                let k0 = j0.max(j.saturating_sub(self.bw));
                let len = j - k0;
                let ri = i * w + (self.bw + k0 - i);
                let rj = j * w + (self.bw + k0 - j);
                let s = dot(&self.data[ri..ri + len], &self.data[rj..rj + len]);
                let pos = i * w + (self.bw + j - i);
                let v = self.data[pos] - s;
                if i == j {
                    if !(v > T::zero()) {
                        return Err(Error::SingularSystem { equation: i });
                    }
                    self.data[pos] = v.sqrt();
                } else {
                    self.data[pos] = v / self.data[j * w + self.bw];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    // Independent accumulators let the compiler vectorize.
    let mut acc = [T::zero(); 16];
    let ca = a.chunks_exact(16);
    let cb = b.chunks_exact(16);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..16 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = acc.iter().fold(T::zero(), |s, v| s + *v);
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

#[derive(Clone, Debug)]
pub struct BandCholesky<T> {
    l: BandMatrix<T>,
}

impl<T: Scalar> BandCholesky<T> {
    pub fn dim(&self) -> usize {
        self.l.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let l = &self.l;
        let w = l.bw + 1;
        let mut y = b.to_vec();
        for i in 0..l.n {
            let j0 = i.saturating_sub(l.bw);
            let row = i * w + (l.bw + j0 - i);
            let s = dot(&l.data[row..row + (i - j0)], &y[j0..i]);
            y[i] = (y[i] - s) / l.data[i * w + l.bw];
        }
        for i in (0..l.n).rev() {
            y[i] /= l.data[i * w + l.bw];
            let yi = y[i];
            let j0 = i.saturating_sub(l.bw);
            for j in j0..i {
                y[j] -= l.data[i * w + (l.bw + j - i)] * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> BandMatrix<f64> {
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn tridiagonal_solve() {
        let n = 50;
        let a = laplace_1d(n);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x);
        let y = a.clone().factorize().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn wide_band_against_dense_oracle() {
        // A = Mᵀ M + I restricted to a band, built densely then copied.
        let n = 12;
        let bw = 4;
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) <= bw {
                    dense[i][j] = 1.0 / (1.0 + (i + j) as f64) + if i == j { 3.0 } else { 0.0 };
                }
            }
        }
        let mut a = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in 0..=i {
                if i - j <= bw {
                    a.add(i, j, dense[i][j]);
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i][j] * x[j]).sum()).collect();
        let y = a.factorize().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10, "{u} {v}");
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let mut a = laplace_1d(4);
        a.add(2, 2, -10.0);
        match a.factorize() {
            Err(Error::SingularSystem { equation }) => assert_eq!(equation, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
