//! Banded matrices: symmetric storage with Cholesky, general storage with LU.

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

/// Symmetric banded matrix, lower band stored row by row:
/// `data[i * (bw + 1) + d] = A[i][i - d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedSym<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> BandedSym<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![T::zero(); n * (bw + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            T::zero()
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        self.data[i * (self.bw + 1) + (i - j)] += v;
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { data: self.data.iter().map(|&v| v * s).collect(), ..self.clone() }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[i * (self.bw + 1) + (i - j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Banded Cholesky factorisation `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<BandedCholesky<T>> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: to_f64(s) });
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Cholesky factor of a [`BandedSym`] matrix.
#[derive(Clone, Debug)]
pub struct BandedCholesky<T> {
    n: usize,
    bw: usize,
    l: Vec<T>,
}

impl<T: Real> BandedCholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (i - k)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + (k - i)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}

/// General banded matrix with equal lower and upper bandwidth, stored as
/// `data[i * (2 bw + 1) + (j + bw - i)] = A[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Banded<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> Banded<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![T::zero(); n * (2 * bw + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i.abs_diff(j) > self.bw {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(i.abs_diff(j) <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// LU factorisation without pivoting. Adequate for matrices whose
    /// symmetric part is positive definite, which covers the dG slab systems.
    pub fn lu(&self) -> Result<BandedLu<T>> {
        let (n, bw) = (self.n, self.bw);
        let mut a = self.clone();
        for k in 0..n {
            let pivot = a.data[a.idx(k, k)];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::SingularMatrix(k));
            }
            let hi = (k + bw).min(n - 1);
            for i in k + 1..=hi {
                let ik = a.idx(i, k);
                let factor = a.data[ik] / pivot;
                a.data[ik] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in k + 1..=hi {
                    let kj = a.data[a.idx(k, j)];
                    let ij = a.idx(i, j);
                    a.data[ij] -= factor * kj;
                }
            }
        }
        Ok(BandedLu { lu: a })
    }
}

/// In-place LU factors of a [`Banded`] matrix.
#[derive(Clone, Debug)]
pub struct BandedLu<T> {
    lu: Banded<T>,
}

impl<T: Real> BandedLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let a = &self.lu;
        let (n, bw) = (a.n, a.bw);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= a.data[a.idx(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= a.data[a.idx(i, k)] * x[k];
            }
            x[i] = s / a.data[a.idx(i, i)];
        }
        x
    }
}
