//! Jacobi-preconditioned conjugate gradients.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgStats {
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖` at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` given as an operator.
/// `x` holds the initial guess on entry.
pub fn pcg<T: Scalar>(
    apply: impl Fn(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    x: &mut [T],
    rel_tol: T,
    max_iter: usize,
) -> PcgStats {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return PcgStats {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let inv_diag: Vec<T> = diag
        .iter()
        .map(|d| if *d > T::zero() { T::one() / *d } else { T::one() })
        .collect();
    let mut ax = vec![T::zero(); n];
    apply(x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(b, a)| *b - *a).collect();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(r, d)| *r * *d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![T::zero(); n];
    let target = rel_tol * bnorm;
    let mut rnorm = dot(&r, &r).sqrt();
    let mut it = 0;
    while rnorm > target && it < max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > T::zero()) {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rnorm = dot(&r, &r).sqrt();
        it += 1;
    }
    let rel = (rnorm / bnorm).to_f64().unwrap_or(f64::NAN);
    PcgStats {
        iterations: it,
        relative_residual: rel,
        converged: rnorm <= target,
    }
}
