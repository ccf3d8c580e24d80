//! Small fixed-size tensors for small-strain continuum mechanics.
//!
//! Symmetric second-order tensors are stored in Mandel form
//! `[t11, t22, t33, √2 t23, √2 t13, √2 t12]`. The basis is orthonormal, so the
//! Euclidean inner product of two Mandel vectors equals the double contraction
//! `A : B` of the full tensors, and the vector norm equals the Frobenius norm.
//! Fourth-order tensors with minor symmetries become 6×6 matrices acting on
//! these vectors.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::scalar::{lit, Scalar};

/// Mandel slot of tensor component `(i, j)`.
pub const fn mandel_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// Symmetric second-order tensor in Mandel notation.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SymTensor2<T>(pub [T; 6]);

impl<T: Scalar> SymTensor2<T> {
    pub fn zero() -> Self {
        Self([T::zero(); 6])
    }

    /// Second-order identity `I`.
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self([o, o, o, z, z, z])
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        let z = T::zero();
        Self([a, b, c, z, z, z])
    }

    /// Symmetric part of a full 3×3 matrix.
    pub fn from_matrix(m: [[T; 3]; 3]) -> Self {
        let half = lit::<T>(0.5);
        let s = lit::<T>(std::f64::consts::SQRT_2);
        Self([
            m[0][0],
            m[1][1],
            m[2][2],
            s * half * (m[1][2] + m[2][1]),
            s * half * (m[0][2] + m[2][0]),
            s * half * (m[0][1] + m[1][0]),
        ])
    }

    pub fn to_matrix(&self) -> [[T; 3]; 3] {
        let mut m = [[T::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.component(i, j);
            }
        }
        m
    }

    /// Tensor component `t_ij` (not the Mandel-scaled slot).
    pub fn component(&self, i: usize, j: usize) -> T {
        let k = mandel_index(i, j);
        if k < 3 {
            self.0[k]
        } else {
            self.0[k] / lit::<T>(std::f64::consts::SQRT_2)
        }
    }

    pub fn trace(&self) -> T {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Deviatoric part `t - tr(t)/3 I`.
    pub fn dev(&self) -> Self {
        let m = self.trace() / lit::<T>(3.0);
        let mut d = *self;
        d.0[0] -= m;
        d.0[1] -= m;
        d.0[2] -= m;
        d
    }

    /// Double contraction `self : other`.
    pub fn ddot(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.ddot(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|v| v * s))
    }

    /// Dyadic product `self ⊗ other`.
    pub fn outer(&self, other: &Self) -> Tensor4<T> {
        let mut m = [[T::zero(); 6]; 6];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i] * other.0[j];
            }
        }
        Tensor4(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// von Mises equivalent of a stress tensor, `sqrt(3/2) ‖dev σ‖`.
    pub fn von_mises(&self) -> T {
        lit::<T>(1.5).sqrt() * self.dev().norm()
    }

    /// von Mises equivalent of a strain tensor, `sqrt(2/3) ‖dev ε‖`.
    pub fn von_mises_strain(&self) -> T {
        lit::<T>(2.0 / 3.0).sqrt() * self.dev().norm()
    }
}

impl<T: Scalar> Index<usize> for SymTensor2<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> IndexMut<usize> for SymTensor2<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Scalar> Add for SymTensor2<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Scalar> AddAssign for SymTensor2<T> {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl<T: Scalar> Sub for SymTensor2<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<T: Scalar> SubAssign for SymTensor2<T> {
    fn sub_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl<T: Scalar> Neg for SymTensor2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|v| -v))
    }
}

impl<T: Scalar> Mul<T> for SymTensor2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Fourth-order tensor with minor symmetries, as a 6×6 Mandel matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4<T>(pub [[T; 6]; 6]);

impl<T: Scalar> Tensor4<T> {
    pub fn zero() -> Self {
        Self([[T::zero(); 6]; 6])
    }

    /// Symmetric fourth-order identity `𝕀_sym`.
    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..6 {
            m.0[i][i] = T::one();
        }
        m
    }

    /// Deviatoric projector `ℙ = 𝕀_sym - 1/3 I ⊗ I`.
    pub fn deviatoric_projector() -> Self {
        let i = SymTensor2::<T>::identity();
        Self::identity() - i.outer(&i).scale(lit::<T>(1.0 / 3.0))
    }

    /// Isotropic tensor `λ I ⊗ I + 2μ 𝕀_sym`.
    pub fn isotropic(lambda: T, mu: T) -> Self {
        let i = SymTensor2::<T>::identity();
        i.outer(&i).scale(lambda) + Self::identity().scale(mu + mu)
    }

    /// `self : t`.
    pub fn dot(&self, t: &SymTensor2<T>) -> SymTensor2<T> {
        let mut out = [T::zero(); 6];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            *o = row
                .iter()
                .zip(t.0.iter())
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
        SymTensor2(out)
    }

    /// `t : self`.
    pub fn left_dot(&self, t: &SymTensor2<T>) -> SymTensor2<T> {
        self.transpose().dot(t)
    }

    /// `self : other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = T::zero();
                for k in 0..6 {
                    acc += self.0[i][k] * other.0[k][j];
                }
                m.0[i][j] = acc;
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..6 {
            for j in 0..6 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.map(|row| row.map(|v| v * s)))
    }

    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flat_map(|r| r.iter()).all(|v| v.is_finite())
    }

    /// Minimum-norm least-squares solution of `self : x = rhs`.
    ///
    /// Uses a one-sided Jacobi SVD; singular values below `1e-6` of the
    /// largest are treated as zero, so near-null directions receive no
    /// component of `x`.
    pub fn solve(&self, rhs: &SymTensor2<T>) -> Option<SymTensor2<T>> {
        let scale = self.max_abs();
        if !(scale > T::zero()) || !scale.is_finite() {
            return None;
        }
        // Columns of `u` become U Σ, `v` accumulates the rotations.
        let mut u = self.0;
        let mut v = Tensor4::<T>::identity().0;
        let eps = T::epsilon();
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..5 {
                for q in p + 1..6 {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for row in u.iter() {
                        alpha += row[p] * row[p];
                        beta += row[q] * row[q];
                        gamma += row[p] * row[q];
                    }
                    if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (lit::<T>(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for m in [&mut u, &mut v] {
                        for row in m.iter_mut() {
                            let (a, b) = (row[p], row[q]);
                            row[p] = c * a - s * b;
                            row[q] = s * a + c * b;
                        }
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma: [T; 6] = std::array::from_fn(|k| u.iter().map(|row| row[k] * row[k]).sum::<T>().sqrt());
        let smax = sigma.iter().fold(T::zero(), |m, &x| m.max(x));
        let cutoff = smax * lit::<T>(1e-6);
        let mut x = [T::zero(); 6];
        for k in 0..6 {
            if sigma[k] <= cutoff {
                continue;
            }
            // (U Σ)ᵀ b / σ² = Uᵀ b / σ
            let mut proj = T::zero();
            for (row, b) in u.iter().zip(rhs.0.iter()) {
                proj += row[k] * *b;
            }
            let coef = proj / (sigma[k] * sigma[k]);
            for (xi, vrow) in x.iter_mut().zip(v.iter()) {
                *xi += vrow[k] * coef;
            }
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(SymTensor2(x))
        } else {
            None
        }
    }
}

impl<T: Scalar> Add for Tensor4<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (ra, rb) in self.0.iter_mut().zip(rhs.0.iter()) {
            for (a, &b) in ra.iter_mut().zip(rb.iter()) {
                *a += b;
            }
        }
        self
    }
}

impl<T: Scalar> Sub for Tensor4<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (ra, rb) in self.0.iter_mut().zip(rhs.0.iter()) {
            for (a, &b) in ra.iter_mut().zip(rb.iter()) {
                *a -= b;
            }
        }
        self
    }
}
