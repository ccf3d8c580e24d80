//! Rate-independent J2 plasticity with isotropic hardening, integrated by
//! radial return. Dissipative and path dependent; serves as the reference the
//! surrogate is compared against.

use super::yield_law::{yield_r, yield_slope};
use super::{MaterialParams, StiffnessTensor};
use crate::scalar::{lit, Scalar};
use crate::tensor::{SymTensor2, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ClassicState<T> {
    /// Total strain of the last converged step.
    pub eps: SymTensor2<T>,
    pub eps_p: SymTensor2<T>,
    /// Accumulated plastic arc length `∫‖ε̇^p‖ dt`.
    pub alpha: T,
}

#[derive(Clone, Copy, Debug)]
pub struct ClassicReturn<T> {
    pub eps_p: SymTensor2<T>,
    pub alpha: T,
    pub stress: SymTensor2<T>,
    /// Algorithmic tangent `dσ/dε`.
    pub tangent: Tensor4<T>,
    pub plastic: bool,
}

/// One backward-Euler radial return from `(eps_p_n, alpha_n)` to total strain `eps`.
pub fn classic_return<T: Scalar>(
    eps_p_n: &SymTensor2<T>,
    alpha_n: T,
    eps: &SymTensor2<T>,
    chi: T,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
) -> ClassicReturn<T> {
    let c3 = chi * chi * chi;
    let a = lit::<T>(2.0) * stiff.mu * c3;
    let k = stiff.bulk_modulus() * c3;
    let i = SymTensor2::identity();
    let vol = i.scale(k * eps.trace());
    let dev_trial = (eps.dev() - eps_p_n.dev()).scale(a);
    let trial_norm = dev_trial.norm();
    let r_n = yield_r(alpha_n, chi, params);
    let iso = i.outer(&i).scale(k);
    let p = Tensor4::deviatoric_projector();

    if trial_norm - r_n <= T::zero() {
        return ClassicReturn {
            eps_p: *eps_p_n,
            alpha: alpha_n,
            stress: vol + dev_trial,
            tangent: iso + p.scale(a),
            plastic: false,
        };
    }

    // ‖s_trial‖ − a Δγ − r(α_n + Δγ) = 0
    let mut dg = (trial_norm - r_n) / (a + c3 * yield_slope(alpha_n, params));
    for _ in 0..50 {
        let g = trial_norm - a * dg - yield_r(alpha_n + dg, chi, params);
        let dgdx = -a - c3 * yield_slope(alpha_n + dg, params);
        let step = g / dgdx;
        dg -= step;
        if step.abs() <= lit::<T>(1e-15) * (T::one() + dg.abs()) {
            break;
        }
    }
    let n = dev_trial.scale(T::one() / trial_norm);
    let alpha = alpha_n + dg;
    let rp = c3 * yield_slope(alpha, params);
    let theta = a * dg / trial_norm;
    let tangent = iso + p.scale(a * (T::one() - theta))
        - n.outer(&n).scale(a * (a / (a + rp) - theta));
    ClassicReturn {
        eps_p: *eps_p_n + n.scale(dg),
        alpha,
        stress: vol + dev_trial - n.scale(a * dg),
        tangent,
        plastic: true,
    }
}

/// Advances the classic model to `eps_new` in `n_substeps` equal strain increments.
pub fn classic_update<T: Scalar>(
    state: &ClassicState<T>,
    eps_new: &SymTensor2<T>,
    chi: T,
    stiff: &StiffnessTensor<T>,
    params: &MaterialParams<T>,
    n_substeps: usize,
) -> ClassicState<T> {
    let n = n_substeps.max(1);
    let delta = (*eps_new - state.eps).scale(T::one() / lit::<T>(n as f64));
    let mut cur = *state;
    for step in 1..=n {
        let eps = if step == n {
            *eps_new
        } else {
            state.eps + delta.scale(lit(step as f64))
        };
        let ret = classic_return(&cur.eps_p, cur.alpha, &eps, chi, stiff, params);
        cur = ClassicState {
            eps,
            eps_p: ret.eps_p,
            alpha: ret.alpha,
        };
    }
    cur
}
