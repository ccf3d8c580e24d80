//! Dissipation-free surrogate plasticity.
//!
//! The plastic strain at an integration point is the root of the algebraic
//! residual
//!
//! ```text
//! s(ε^p) = −σ + r³/(σ_dev : C : σ_dev + (∂r/∂ε^p : σ_dev) r) · [σ_dev : C / r + ∂r/∂ε^p]
//!          + (I : C : ε)/(I : 𝔼₀ : I) · I : 𝔼₀,        C = χ³ 𝔼₀,
//! ```
//!
//! whose roots satisfy `‖σ_dev‖ = r` and `I : σ = I : C : ε`. Since the model is
//! algebraic, the plastic strain depends only on the current strain and
//! density, never on the loading history.

use super::yield_law::{yield_r, yield_r_d1, yield_r_d2, yield_slope};
use super::{MaterialParams, PointState, StiffnessTensor};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};
use crate::tensor::{SymTensor2, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Elastic,
    Plastic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateResidual<T> {
    pub s: SymTensor2<T>,
    /// `s / χ`.
    pub s_scaled: SymTensor2<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateTangent<T> {
    /// `∂s/∂ε^p`, rows indexed by the component of `s`.
    pub ds: Tensor4<T>,
    pub ds_scaled: Tensor4<T>,
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions<T> {
    /// Convergence threshold on the largest residual component (MPa).
    pub tol: T,
    pub max_iter: usize,
    /// Iterate on `s/χ` instead of `s`.
    pub scaled: bool,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-8),
            max_iter: 50,
            scaled: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct UpdateOptions<T> {
    pub newton: NewtonOptions<T>,
    /// Plastic strains are kept when `|Φ_σ(σ_trial)| / r` is below this value.
    /// Zero disables the shortcut.
    pub gate: T,
}

impl<T: Scalar> Default for UpdateOptions<T> {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            gate: lit(0.01),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateSolution<T> {
    pub eps_p: SymTensor2<T>,
    pub iterations: usize,
    pub residual: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlasticBranch {
    /// Below yield: the plastic strain vanishes.
    Elastic,
    /// Trial stress within the gate of the yield surface: previous value kept.
    Retained,
    Newton { iterations: usize },
    /// Newton failed; previous value kept.
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlasticUpdate<T> {
    pub eps_p: SymTensor2<T>,
    pub branch: PlasticBranch,
}

/// Intermediate quantities shared by the residual and its tangent.
struct Evaluation<T> {
    s: SymTensor2<T>,
    tangent: Option<Tensor4<T>>,
}

fn evaluate<T: Scalar>(
    eps: &SymTensor2<T>,
    eps_p: &SymTensor2<T>,
    chi: T,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
    with_tangent: bool,
) -> Result<Evaluation<T>> {
    let c3 = chi * chi * chi;
    let c = stiff.tensor.scale(c3);
    let sigma = c.dot(&(*eps - *eps_p));
    let dev = sigma.dev();
    let r = yield_r(eps_p.norm(), chi, params);
    let g = yield_r_d1(eps_p, chi, params);

    let dev_norm = dev.norm();
    if !(dev_norm > lit::<T>(1e-12) * r) {
        return Err(Error::SingularDeviator);
    }
    let c_dev = c.dot(&dev);
    let g_dev = g.ddot(&dev);
    let denom = dev.ddot(&c_dev) + g_dev * r;
    if !(denom > T::zero()) || !denom.is_finite() {
        return Err(Error::SingularDeviator);
    }
    let coef = r * r * r / denom;
    let w = c_dev.scale(T::one() / r) + g;
    let vol = SymTensor2::identity().ddot(&c.dot(eps)) / stiff.identity_energy();
    let s = -sigma + w.scale(coef) + stiff.dot_identity().scale(vol);

    let tangent = if with_tangent {
        let h = yield_r_d2(eps_p, chi, params);
        let p = Tensor4::deviatoric_projector();
        let cpc = c.compose(&p).compose(&c);
        let cpg = c.dot(&p.dot(&g));
        // ∇D = −2 C:ℙ:C:σ_dev + (g:σ_dev) g + r (H:σ_dev − C:ℙ:g)
        let grad_denom = cpc.dot(&dev).scale(lit(-2.0))
            + g.scale(g_dev)
            + (h.dot(&dev) - cpg).scale(r);
        // ∇(r³/D) = 3r² g / D − r³ ∇D / D²
        let grad_coef = g.scale(lit::<T>(3.0) * r * r / denom)
            - grad_denom.scale(coef / denom);
        // ∂w/∂ε^p = −C:ℙ:C / r − (C:σ_dev) ⊗ g / r² + H
        let dw = cpc.scale(-T::one() / r) - c_dev.outer(&g).scale(T::one() / (r * r)) + h;
        Some(c + w.outer(&grad_coef) + dw.scale(coef))
    } else {
        None
    };
    Ok(Evaluation { s, tangent })
}

/// Strain-based yield indicator `Φ_ε = ‖ℙ : χ³𝔼₀ : ε‖ − r(‖ε^p‖)`.
pub fn indicator_strain<T: Scalar>(
    state: &PointState<T>,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
) -> Regime {
    let c3 = state.chi * state.chi * state.chi;
    let linear = stiff.tensor.dot(&state.eps).scale(c3);
    let r = yield_r(state.eps_p.norm(), state.chi, params);
    if linear.dev().norm() - r >= T::zero() {
        Regime::Plastic
    } else {
        Regime::Elastic
    }
}

pub fn surrogate_residual<T: Scalar>(
    state: &PointState<T>,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
) -> Result<SurrogateResidual<T>> {
    let ev = evaluate(&state.eps, &state.eps_p, state.chi, stiff, params, false)?;
    Ok(SurrogateResidual {
        s: ev.s,
        s_scaled: ev.s.scale(T::one() / state.chi),
    })
}

pub fn surrogate_tangent<T: Scalar>(
    state: &PointState<T>,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
) -> Result<SurrogateTangent<T>> {
    let ev = evaluate(&state.eps, &state.eps_p, state.chi, stiff, params, true)?;
    let ds = ev.tangent.expect("tangent requested");
    Ok(SurrogateTangent {
        ds,
        ds_scaled: ds.scale(T::one() / state.chi),
    })
}

/// Newton iteration on the (optionally scaled) surrogate residual, starting
/// from `ε^p = 0`.
pub fn solve_surrogate<T: Scalar>(
    eps: &SymTensor2<T>,
    chi: T,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
    opts: &NewtonOptions<T>,
) -> Result<SurrogateSolution<T>> {
    let scale = if opts.scaled { T::one() / chi } else { T::one() };
    let mut x = SymTensor2::zero();
    let mut iterations = 0;
    loop {
        let ev = evaluate(eps, &x, chi, stiff, params, true)?;
        let res = ev.s.max_abs() * scale;
        if !res.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: f64::INFINITY,
            });
        }
        if res <= opts.tol {
            return Ok(SurrogateSolution {
                eps_p: x,
                iterations,
                residual: res,
            });
        }
        if iterations == opts.max_iter {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: to_f64(res),
            });
        }
        let jac = ev.tangent.expect("tangent requested");
        // The 1/χ factor cancels in J⁻¹ s; it only changes the stopping test.
        let step = jac.solve(&ev.s).ok_or(Error::SingularDeviator)?;
        x -= step;
        iterations += 1;
    }
}

/// Plastic strain update at one integration point for the new total strain.
///
/// The elastic/plastic decision uses the strain indicator evaluated at the
/// initial value `ε^p = 0`, so the result depends only on `(ε_new, χ)` unless
/// the trial-stress gate keeps `eps_p_prev`.
pub fn update_plastic_strains<T: Scalar>(
    eps_p_prev: &SymTensor2<T>,
    eps_new: &SymTensor2<T>,
    chi: T,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
    opts: &UpdateOptions<T>,
) -> PlasticUpdate<T> {
    let fresh = PointState::new(*eps_new, SymTensor2::zero(), chi);
    if indicator_strain(&fresh, stiff, params) == Regime::Elastic {
        return PlasticUpdate {
            eps_p: SymTensor2::zero(),
            branch: PlasticBranch::Elastic,
        };
    }
    if opts.gate > T::zero() {
        let trial = super::stress(&PointState::new(*eps_new, *eps_p_prev, chi), stiff);
        let r = yield_r(eps_p_prev.norm(), chi, params);
        let phi = trial.dev().norm() - r;
        if (phi / r).abs() < opts.gate {
            return PlasticUpdate {
                eps_p: *eps_p_prev,
                branch: PlasticBranch::Retained,
            };
        }
    }
    match solve_surrogate(eps_new, chi, stiff, params, &opts.newton) {
        Ok(sol) => PlasticUpdate {
            eps_p: sol.eps_p,
            branch: PlasticBranch::Newton {
                iterations: sol.iterations,
            },
        },
        Err(_) => PlasticUpdate {
            eps_p: *eps_p_prev,
            branch: PlasticBranch::Failed,
        },
    }
}

/// Derivative `dσ/dε` of the surrogate stress response at a converged state.
///
/// Uses the closed form of the radial solution for isotropic elasticity:
/// `σ = K χ³ tr(ε) I + r n` with `n = dev ε / ‖dev ε‖`.
pub fn surrogate_stress_tangent<T: Scalar>(
    state: &PointState<T>,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
) -> Tensor4<T> {
    let c3 = state.chi * state.chi * state.chi;
    let alpha = state.eps_p.norm();
    let e = state.eps.dev();
    let e_norm = e.norm();
    if alpha == T::zero() || e_norm == T::zero() {
        return stiff.tensor.scale(c3);
    }
    let a = lit::<T>(2.0) * stiff.mu * c3;
    let k = stiff.bulk_modulus() * c3;
    let r = yield_r(alpha, state.chi, params);
    let rp = c3 * yield_slope(alpha, params);
    let n = e.scale(T::one() / e_norm);
    let nn = n.outer(&n);
    let i = SymTensor2::identity();
    let p = Tensor4::deviatoric_projector();
    i.outer(&i).scale(k) + (p - nn).scale(r / e_norm) + nn.scale(a * rp / (a + rp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{elasticity_tensor, stress, PlasticityKind};

    fn setup(kind: PlasticityKind) -> (MaterialParams<f64>, StiffnessTensor<f64>) {
        let p = MaterialParams::steel(kind);
        (p, elasticity_tensor(&p))
    }

    fn path_matrix() -> SymTensor2<f64> {
        SymTensor2::from_matrix([[1.0, 0.6, 0.6], [0.6, -0.3, -0.1], [0.6, -0.1, -0.3]])
    }

    #[test]
    fn indicator_examples() {
        let (p, e) = setup(PlasticityKind::Ideal);
        let zero = PointState::new(SymTensor2::zero(), SymTensor2::zero(), 1.0);
        assert_eq!(indicator_strain(&zero, &e, &p), Regime::Elastic);
        let eps = SymTensor2::diag(0.001, 0.0, 0.0);
        let lin = stress(&PointState::new(eps, SymTensor2::zero(), 1.0), &e);
        assert!((lin.dev().norm() - 131.9).abs() < 0.05);
        let st = PointState::new(eps, SymTensor2::zero(), 1.0);
        assert_eq!(indicator_strain(&st, &e, &p), Regime::Elastic);
        let st2 = PointState::new(eps.scale(2.0), SymTensor2::zero(), 1.0);
        assert_eq!(indicator_strain(&st2, &e, &p), Regime::Plastic);
    }

    #[test]
    fn root_satisfies_constraints() {
        for kind in [PlasticityKind::Ideal, PlasticityKind::Linear, PlasticityKind::Exponential] {
            let (p, e) = setup(kind);
            let eps = path_matrix().scale(0.004);
            let chi = 0.8;
            let sol = solve_surrogate(&eps, chi, &e, &p, &NewtonOptions::default()).unwrap();
            let st = PointState::new(eps, sol.eps_p, chi);
            let sig = stress(&st, &e);
            let r = yield_r(sol.eps_p.norm(), chi, &p);
            assert!((sig.dev().norm() / r - 1.0).abs() < 1e-8, "{kind}");
            let lin = e.tensor.dot(&eps).scale(chi * chi * chi);
            assert!((sig.trace() - lin.trace()).abs() < 1e-6);
            assert!(sol.eps_p.trace().abs() < 1e-12);
        }
    }

    #[test]
    fn elastic_point_returns_zero() {
        let (p, e) = setup(PlasticityKind::Ideal);
        let eps = path_matrix().scale(1e-4);
        let up = update_plastic_strains(&SymTensor2::zero(), &eps, 1.0, &e, &p, &UpdateOptions::default());
        assert_eq!(up.branch, PlasticBranch::Elastic);
        assert_eq!(up.eps_p, SymTensor2::zero());
        // Previous plastic history is discarded on virtual unloading.
        let prev = path_matrix().dev().scale(1e-3);
        let up = update_plastic_strains(&prev, &eps, 1.0, &e, &p, &UpdateOptions::default());
        assert_eq!(up.eps_p, SymTensor2::zero());
    }

    #[test]
    fn gate_retains_previous_plastic_strain() {
        let (p, e) = setup(PlasticityKind::Ideal);
        let eps = path_matrix().scale(0.004);
        let sol = solve_surrogate(&eps, 1.0, &e, &p, &NewtonOptions::default()).unwrap();
        // Shift the previous plastic strain so that Φ_σ(σ_trial)/r = 0.005.
        let r = p.sigma_y();
        let n = eps.dev().scale(1.0 / eps.dev().norm());
        let a = 2.0 * e.mu;
        let prev = sol.eps_p - n.scale(0.005 * r / a);
        let trial = stress(&PointState::new(eps, prev, 1.0), &e);
        assert!(((trial.dev().norm() - r) / r - 0.005).abs() < 1e-9);
        let up = update_plastic_strains(&prev, &eps, 1.0, &e, &p, &UpdateOptions::default());
        assert_eq!(up.branch, PlasticBranch::Retained);
        assert_eq!(up.eps_p, prev);
    }

    #[test]
    fn singular_deviator_is_reported() {
        let (p, e) = setup(PlasticityKind::Ideal);
        let eps = SymTensor2::identity().scale(1e-3);
        let st = PointState::new(eps, SymTensor2::zero(), 1.0);
        assert!(matches!(surrogate_residual(&st, &e, &p), Err(Error::SingularDeviator)));
    }

    #[test]
    fn exponential_tangent_near_zero_is_finite() {
        let (p, e) = setup(PlasticityKind::Exponential);
        let eps = path_matrix().scale(0.004);
        let x = path_matrix().dev();
        let x = x.scale(1e-12 / x.norm());
        let t = surrogate_tangent(&PointState::new(eps, x, 0.6), &e, &p).unwrap();
        assert!(t.ds.is_finite() && t.ds_scaled.is_finite());
    }

    #[test]
    fn scaled_and_unscaled_newton_agree() {
        let (p, e) = setup(PlasticityKind::Linear);
        let eps = path_matrix().scale(0.003);
        for chi in [0.1, 0.4, 1.0] {
            let mut o = NewtonOptions::default();
            let a = solve_surrogate(&eps, chi, &e, &p, &o).unwrap();
            o.scaled = false;
            let b = solve_surrogate(&eps, chi, &e, &p, &o).unwrap();
            assert!((a.eps_p - b.eps_p).max_abs() < 1e-10);
        }
    }

    #[test]
    fn stress_tangent_matches_finite_differences_of_response() {
        for kind in [PlasticityKind::Ideal, PlasticityKind::Linear, PlasticityKind::Exponential] {
            let (p, e) = setup(kind);
            let opts = NewtonOptions { tol: 1e-11, ..NewtonOptions::default() };
            let chi = 0.9;
            let eps = path_matrix().scale(0.004) + SymTensor2::diag(1e-4, -2e-4, 3e-4);
            let response = |x: &SymTensor2<f64>| {
                let sol = solve_surrogate(x, chi, &e, &p, &opts).unwrap();
                stress(&PointState::new(*x, sol.eps_p, chi), &e)
            };
            let sol = solve_surrogate(&eps, chi, &e, &p, &opts).unwrap();
            let tan = surrogate_stress_tangent(&PointState::new(eps, sol.eps_p, chi), &e, &p);
            let h = 1e-8;
            for k in 0..6 {
                let mut xp = eps;
                let mut xm = eps;
                xp[k] += h;
                xm[k] -= h;
                let col = (response(&xp) - response(&xm)).scale(0.5 / h);
                for i in 0..6 {
                    assert!(
                        (col[i] - tan.0[i][k]).abs() < 1e-4 * tan.max_abs(),
                        "{kind} ({i},{k}): {} vs {}",
                        col[i],
                        tan.0[i][k]
                    );
                }
            }
        }
    }
}
