//! Constitutive layer: isotropic elasticity with SIMP scaling, the three yield
//! laws, the dissipation-free surrogate plasticity model and a classic J2
//! return-mapping integrator used as its reference.

mod classic;
mod surrogate;
mod yield_law;

use std::fmt;
use std::str::FromStr;

pub use classic::{classic_return, classic_update, ClassicReturn, ClassicState};
pub use surrogate::{
    indicator_strain, solve_surrogate, surrogate_residual, surrogate_stress_tangent,
    surrogate_tangent, update_plastic_strains, NewtonOptions, PlasticBranch, PlasticUpdate,
    Regime, SurrogateResidual, SurrogateSolution, SurrogateTangent, UpdateOptions,
};
pub use yield_law::{yield_r, yield_r_d1, yield_r_d2, yield_slope, yield_curvature};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::tensor::{SymTensor2, Tensor4};

/// Yield stress used to emulate purely elastic behaviour (MPa).
pub const ELASTIC_SENTINEL_YIELD: f64 = 500_000.0;

/// Yield threshold law `r(‖ε^p‖)` before SIMP scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum YieldLaw<T> {
    Ideal,
    LinearHardening { h: T },
    /// Slope moves from `h0` at yield onset to `h1`; `kappa` sets the transition.
    ExponentialHardening { h0: T, h1: T, kappa: T },
}

/// Named plasticity variants selectable from configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlasticityKind {
    Elastic,
    Ideal,
    Linear,
    Exponential,
}

impl PlasticityKind {
    pub const ALL: [PlasticityKind; 4] = [
        PlasticityKind::Elastic,
        PlasticityKind::Ideal,
        PlasticityKind::Linear,
        PlasticityKind::Exponential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlasticityKind::Elastic => "elastic",
            PlasticityKind::Ideal => "ideal",
            PlasticityKind::Linear => "linear",
            PlasticityKind::Exponential => "exponential",
        }
    }
}

impl fmt::Display for PlasticityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlasticityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "elastic" => Ok(PlasticityKind::Elastic),
            "ideal" => Ok(PlasticityKind::Ideal),
            "linear" => Ok(PlasticityKind::Linear),
            "exponential" | "exp" => Ok(PlasticityKind::Exponential),
            other => Err(Error::Config(format!(
                "plasticity: unknown law '{other}' (expected elastic|ideal|linear|exponential)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams<T> {
    /// Young's modulus (MPa).
    pub e0: T,
    pub nu: T,
    /// Experimental (uniaxial) yield stress (MPa).
    pub sigma_y_exp: T,
    pub law: YieldLaw<T>,
}

impl<T: Scalar> MaterialParams<T> {
    /// Structural steel: E0 = 210 GPa, ν = 0.3, σY_exp = 300 MPa, h = h1 = 1000 MPa,
    /// h0 = 40000 MPa, κ = 300.
    pub fn steel(kind: PlasticityKind) -> Self {
        let law = match kind {
            PlasticityKind::Elastic | PlasticityKind::Ideal => YieldLaw::Ideal,
            PlasticityKind::Linear => YieldLaw::LinearHardening { h: lit(1000.0) },
            PlasticityKind::Exponential => YieldLaw::ExponentialHardening {
                h0: lit(40_000.0),
                h1: lit(1000.0),
                kappa: lit(300.0),
            },
        };
        let sigma_y_exp = if kind == PlasticityKind::Elastic {
            ELASTIC_SENTINEL_YIELD
        } else {
            300.0
        };
        Self {
            e0: lit(210_000.0),
            nu: lit(0.3),
            sigma_y_exp: lit(sigma_y_exp),
            law,
        }
    }

    /// Yield stress of the model, `sqrt(2/3) σY_exp`, so that `‖dev σ‖ = σY`
    /// coincides with a von Mises stress of `σY_exp`.
    pub fn sigma_y(&self) -> T {
        lit::<T>(2.0 / 3.0).sqrt() * self.sigma_y_exp
    }

    /// Lamé constants `(λ, μ)`.
    pub fn lame(&self) -> (T, T) {
        let one = T::one();
        let two = lit::<T>(2.0);
        let lambda = self.e0 * self.nu / ((one + self.nu) * (one - two * self.nu));
        let mu = self.e0 / (two * (one + self.nu));
        (lambda, mu)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidMaterial(m.to_string()));
        if !(self.e0 > T::zero()) {
            return bad("E0 must be positive");
        }
        if !(self.nu > T::zero() && self.nu < lit(0.5)) {
            return bad("Poisson ratio must lie in (0, 0.5)");
        }
        if !(self.sigma_y_exp > T::zero()) {
            return bad("yield stress must be positive");
        }
        match self.law {
            YieldLaw::Ideal => {}
            YieldLaw::LinearHardening { h } => {
                if !(h >= T::zero()) {
                    return bad("hardening slope h must be non-negative");
                }
            }
            YieldLaw::ExponentialHardening { h0, h1, kappa } => {
                if !(h0 > h1 && h1 >= T::zero() && kappa > T::zero()) {
                    return bad("exponential hardening needs h0 > h1 >= 0 and kappa > 0");
                }
            }
        }
        Ok(())
    }
}

/// Isotropic elasticity tensor 𝔼₀ of the full material.
#[derive(Clone, Copy, Debug)]
pub struct StiffnessTensor<T> {
    pub tensor: Tensor4<T>,
    pub lambda: T,
    pub mu: T,
}

impl<T: Scalar> StiffnessTensor<T> {
    pub fn bulk_modulus(&self) -> T {
        self.lambda + lit::<T>(2.0 / 3.0) * self.mu
    }

    /// `𝔼₀ : I`.
    pub fn dot_identity(&self) -> SymTensor2<T> {
        self.tensor.dot(&SymTensor2::identity())
    }

    /// `I : 𝔼₀ : I`.
    pub fn identity_energy(&self) -> T {
        SymTensor2::identity().ddot(&self.dot_identity())
    }
}

pub fn elasticity_tensor<T: Scalar>(params: &MaterialParams<T>) -> StiffnessTensor<T> {
    let (lambda, mu) = params.lame();
    StiffnessTensor {
        tensor: Tensor4::isotropic(lambda, mu),
        lambda,
        mu,
    }
}

/// State at one integration point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointState<T> {
    pub eps: SymTensor2<T>,
    pub eps_p: SymTensor2<T>,
    pub chi: T,
}

impl<T: Scalar> PointState<T> {
    pub fn new(eps: SymTensor2<T>, eps_p: SymTensor2<T>, chi: T) -> Self {
        Self { eps, eps_p, chi }
    }
}

/// `σ = χ³ 𝔼₀ : (ε − ε^p)`.
pub fn stress<T: Scalar>(state: &PointState<T>, stiff: &StiffnessTensor<T>) -> SymTensor2<T> {
    let c3 = state.chi * state.chi * state.chi;
    stiff.tensor.dot(&(state.eps - state.eps_p)).scale(c3)
}

/// Free energy of the virtually full material, `½ (ε − ε^p) : 𝔼₀ : (ε − ε^p)`.
pub fn free_energy0<T: Scalar>(state: &PointState<T>, stiff: &StiffnessTensor<T>) -> T {
    let ee = state.eps - state.eps_p;
    lit::<T>(0.5) * ee.ddot(&stiff.tensor.dot(&ee))
}
