//! Explicit evolution of the element densities: normalized driving force,
//! face-neighbour Laplacian, box constraints and the volume multiplier found
//! by bisection.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityParams<T> {
    pub chi_min: T,
    /// Prescribed volume fraction.
    pub v0: T,
    /// Regularization (mm²).
    pub beta: T,
    /// Viscosity (s).
    pub eta: T,
    /// Pseudo-time step (s).
    pub dt: T,
}

impl<T: Scalar> DensityParams<T> {
    pub fn new(v0: T, beta: T, eta: T) -> Self {
        Self {
            chi_min: lit(0.001),
            v0,
            beta,
            eta,
            dt: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.chi_min > zero && self.chi_min < T::one()) {
            return Err(Error::Config(format!("chi_min: must lie in (0, 1), got {}", self.chi_min)));
        }
        if !(self.v0 > zero && self.v0 <= T::one()) {
            return Err(Error::Config(format!("v0: must lie in (0, 1], got {}", self.v0)));
        }
        if self.v0 < self.chi_min {
            return Err(Error::UnreachableVolume {
                v0: to_f64(self.v0),
                chi_min: to_f64(self.chi_min),
            });
        }
        if !(self.beta >= zero) {
            return Err(Error::Config(format!("beta_mm2: must be non-negative, got {}", self.beta)));
        }
        if !(self.eta > zero) || !(self.dt > zero) {
            return Err(Error::Config("eta_s and dt must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityField<T> {
    pub chi: Vec<T>,
    pub params: DensityParams<T>,
}

impl<T: Scalar> DensityField<T> {
    /// Uniform start `χ = v0`.
    pub fn uniform(n_elements: usize, params: DensityParams<T>) -> Self {
        Self {
            chi: vec![params.v0; n_elements],
            params,
        }
    }

    pub fn volume(&self, mesh: &Mesh<T>) -> T {
        self.chi
            .iter()
            .enumerate()
            .map(|(e, c)| *c * mesh.element_volume(e))
            .sum()
    }

    /// `(Σ χ V − v0 Ω) / (v0 Ω)`.
    pub fn volume_error(&self, mesh: &Mesh<T>) -> T {
        let target = self.params.v0 * mesh.volume;
        (self.volume(mesh) - target) / target
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrivingForceField<T> {
    /// `p = −3 χ² Ψ₀` per element (MPa).
    pub p: Vec<T>,
    /// Weighted mean of `p` (MPa).
    pub p_w: T,
    /// `p / |p_w|`.
    pub p_bar: Vec<T>,
    /// True when every element sits on a bound and `p_w` fell back to mean `|p|`.
    pub fallback: bool,
}

/// Driving force from element-averaged free energies `psi0` of the full material.
///
/// The weighted mean uses `(χ − χ_min)(1 − χ)`, so elements at a bound do not
/// influence the normalization.
pub fn driving_force<T: Scalar>(chi: &[T], psi0: &[T], chi_min: T) -> DrivingForceField<T> {
    let three = lit::<T>(3.0);
    let p: Vec<T> = chi.iter().zip(psi0).map(|(c, s)| -three * *c * *c * *s).collect();
    let mut num = T::zero();
    let mut den = T::zero();
    for (c, pe) in chi.iter().zip(&p) {
        let w = (*c - chi_min) * (T::one() - *c);
        if w > T::zero() {
            num += w * *pe;
            den += w;
        }
    }
    let (p_w, fallback) = if den > T::zero() && num != T::zero() {
        (num / den, false)
    } else {
        let n = lit::<T>(p.len().max(1) as f64);
        (p.iter().map(|v| v.abs()).sum::<T>() / n, true)
    };
    let scale = p_w.abs();
    let p_bar = if scale > T::zero() {
        p.iter().map(|v| *v / scale).collect()
    } else {
        vec![T::zero(); p.len()]
    };
    DrivingForceField {
        p,
        p_w,
        p_bar,
        fallback,
    }
}

/// `Δχ_e = Σ_{f ∈ N(e)} (χ_f − χ_e) / e²`. Missing neighbours at the boundary
/// contribute nothing, which is the zero-flux condition.
pub fn laplacian<T: Scalar>(chi: &[T], mesh: &Mesh<T>) -> Vec<T> {
    let inv = T::one() / (mesh.elem_size * mesh.elem_size);
    mesh.neighbors
        .iter()
        .enumerate()
        .map(|(e, nb)| nb.iter().map(|&f| chi[f] - chi[e]).sum::<T>() * inv)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundState {
    Free,
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityUpdate<T> {
    pub field: DensityField<T>,
    /// Volume multiplier λ_χ.
    pub lambda: T,
    /// Which elements were clamped (bound multiplier active).
    pub bounds: Vec<BoundState>,
    pub bisection_iterations: usize,
}

/// One explicit step
/// `χ ← clamp(χ + Δt/η (−p̄ + β Δχ + λ), χ_min, 1)` with λ chosen so that the
/// total volume stays at `v0 Ω`.
pub fn update_density<T: Scalar>(
    field: &DensityField<T>,
    p_bar: &[T],
    mesh: &Mesh<T>,
) -> Result<DensityUpdate<T>> {
    let prm = &field.params;
    prm.validate()?;
    let n = field.chi.len();
    if p_bar.len() != n || mesh.n_elements() != n {
        return Err(Error::InvalidMesh(format!(
            "density field has {n} entries, driving force {}, mesh {}",
            p_bar.len(),
            mesh.n_elements()
        )));
    }
    if p_bar.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("driving force contains non-finite values".into()));
    }
    let c = prm.dt / prm.eta;
    let lap = laplacian(&field.chi, mesh);
    // χ_e(λ) = clamp(base_e + c λ)
    let base: Vec<T> = (0..n)
        .map(|e| field.chi[e] + c * (-p_bar[e] + prm.beta * lap[e]))
        .collect();
    let vols: Vec<T> = (0..n).map(|e| mesh.element_volume(e)).collect();
    let total: T = vols.iter().copied().sum();
    let target = prm.v0 * total;
    if target < prm.chi_min * total * (T::one() - lit::<T>(1e-12)) {
        return Err(Error::UnreachableVolume {
            v0: to_f64(prm.v0),
            chi_min: to_f64(prm.chi_min),
        });
    }
    let clamp = |x: T| x.max(prm.chi_min).min(T::one());
    let volume_at = |lambda: T| -> T {
        base.iter()
            .zip(&vols)
            .map(|(b, v)| clamp(*b + c * lambda) * *v)
            .sum()
    };

    // Below lo every element is at χ_min, above hi every element is at 1.
    let mut lo = base.iter().fold(T::infinity(), |m, b| m.min((prm.chi_min - *b) / c));
    let mut hi = base.iter().fold(T::neg_infinity(), |m, b| m.max((T::one() - *b) / c));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Config("density update bracket is not finite".into()));
    }
    let mut widen = T::one();
    while volume_at(lo) > target {
        lo -= widen;
        widen *= lit(2.0);
    }
    widen = T::one();
    while volume_at(hi) < target {
        hi += widen;
        widen *= lit(2.0);
    }

    let tol = lit::<T>(1e-12) * total;
    let mut lambda = (lo + hi) * lit(0.5);
    let mut iterations = 0;
    while iterations < 200 {
        lambda = (lo + hi) * lit(0.5);
        let err = volume_at(lambda) - target;
        iterations += 1;
        if err.abs() <= tol || hi - lo <= T::epsilon() * (T::one() + lambda.abs()) {
            break;
        }
        if err > T::zero() {
            hi = lambda;
        } else {
            lo = lambda;
        }
    }
    // The volume is affine in λ on the current active set; one exact step
    // removes the remaining bisection error when the set does not change.
    let free: Vec<usize> = (0..n)
        .filter(|&e| {
            let x = base[e] + c * lambda;
            x > prm.chi_min && x < T::one()
        })
        .collect();
    let free_vol: T = free.iter().map(|&e| vols[e]).sum();
    if free_vol > T::zero() {
        let err = volume_at(lambda) - target;
        let refined = lambda - err / (c * free_vol);
        if (volume_at(refined) - target).abs() < err.abs() {
            lambda = refined;
        }
    }

    let mut bounds = Vec::with_capacity(n);
    let chi: Vec<T> = base
        .iter()
        .map(|b| {
            let x = *b + c * lambda;
            bounds.push(if x <= prm.chi_min {
                BoundState::Lower
            } else if x >= T::one() {
                BoundState::Upper
            } else {
                BoundState::Free
            });
            clamp(x)
        })
        .collect();
    Ok(DensityUpdate {
        field: DensityField {
            chi,
            params: field.params,
        },
        lambda,
        bounds,
        bisection_iterations: iterations,
    })
}
