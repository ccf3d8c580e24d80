use super::{MaterialParams, YieldLaw};
use crate::scalar::Scalar;
use crate::tensor::{SymTensor2, Tensor4};

fn cube<T: Scalar>(x: T) -> T {
    x * x * x
}

/// Yield threshold `r = χ³ r̂(‖ε^p‖)` (MPa).
pub fn yield_r<T: Scalar>(eps_p_norm: T, chi: T, params: &MaterialParams<T>) -> T {
    let sy = params.sigma_y();
    let base = match params.law {
        YieldLaw::Ideal => sy,
        YieldLaw::LinearHardening { h } => sy + h * eps_p_norm,
        YieldLaw::ExponentialHardening { h0, h1, kappa } => {
            sy + h1 * eps_p_norm + (h1 - h0) * ((-kappa * eps_p_norm).exp() - T::one()) / kappa
        }
    };
    cube(chi) * base
}

/// Hardening slope `r' = dr̂/d‖ε^p‖`, without the density factor.
pub fn yield_slope<T: Scalar>(eps_p_norm: T, params: &MaterialParams<T>) -> T {
    match params.law {
        YieldLaw::Ideal => T::zero(),
        YieldLaw::LinearHardening { h } => h,
        YieldLaw::ExponentialHardening { h0, h1, kappa } => {
            h1 - (h1 - h0) * (-kappa * eps_p_norm).exp()
        }
    }
}

/// Second derivative `r'' = d²r̂/d‖ε^p‖²`, without the density factor.
pub fn yield_curvature<T: Scalar>(eps_p_norm: T, params: &MaterialParams<T>) -> T {
    match params.law {
        YieldLaw::Ideal | YieldLaw::LinearHardening { .. } => T::zero(),
        YieldLaw::ExponentialHardening { h0, h1, kappa } => {
            kappa * (h1 - h0) * (-kappa * eps_p_norm).exp()
        }
    }
}

/// `∂r/∂ε^p = χ³ r' ε^p/‖ε^p‖`; the zero tensor at `ε^p = 0`.
pub fn yield_r_d1<T: Scalar>(
    eps_p: &SymTensor2<T>,
    chi: T,
    params: &MaterialParams<T>,
) -> SymTensor2<T> {
    let n = eps_p.norm();
    if matches!(params.law, YieldLaw::Ideal) || n == T::zero() {
        return SymTensor2::zero();
    }
    eps_p.scale(cube(chi) * yield_slope(n, params) / n)
}

/// `∂²r/∂ε^p∂ε^p = χ³ [r' (𝕀/‖ε^p‖ − ε^p⊗ε^p/‖ε^p‖³) + r'' ε^p⊗ε^p/‖ε^p‖²]`;
/// the zero tensor at `ε^p = 0`.
pub fn yield_r_d2<T: Scalar>(eps_p: &SymTensor2<T>, chi: T, params: &MaterialParams<T>) -> Tensor4<T> {
    let n = eps_p.norm();
    if matches!(params.law, YieldLaw::Ideal) || n == T::zero() {
        return Tensor4::zero();
    }
    let slope = yield_slope(n, params);
    let curv = yield_curvature(n, params);
    let nn = eps_p.outer(eps_p);
    let norm_hessian = Tensor4::identity().scale(T::one() / n) - nn.scale(T::one() / (n * n * n));
    (norm_hessian.scale(slope) + nn.scale(curv / (n * n))).scale(cube(chi))
}
