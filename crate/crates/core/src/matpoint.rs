//! Single integration point driven along a prescribed strain cycle, for
//! comparing the surrogate model with the classic return mapping.

use serde::{Deserialize, Serialize};

use crate::material::{
    classic_update, elasticity_tensor, stress, update_plastic_strains, ClassicState, MaterialParams,
    PointState, UpdateOptions,
};
use crate::scalar::{lit, to_f64, Scalar};
use crate::tensor::SymTensor2;

pub const STEPS: usize = 100;
pub const EPS11_MAX: f64 = 0.005;

/// Load factor in `[-1, 1]` at step `l`: 0 → 1 → 0 → −1 → 0 in four equal legs.
/// Exact for steps that are symmetric about a turning point.
pub fn load_factor(l: usize, steps: usize) -> f64 {
    assert!(steps % 4 == 0 && l <= steps, "step {l} of {steps}");
    let q = (steps / 4) as i64;
    let l = l as i64;
    let k = match l / q {
        0 => l,
        1 => 2 * q - l,
        2 => -(l - 2 * q),
        _ => l - 4 * q,
    };
    k as f64 / q as f64
}

/// Strain direction normalised to unit `ε11`.
pub fn path_direction<T: Scalar>(nu: T) -> SymTensor2<T> {
    let (one, a, b) = (T::one(), lit::<T>(0.6), lit::<T>(-0.1));
    SymTensor2::from_matrix([[one, a, a], [a, -nu, b], [a, b, -nu]])
}

pub fn path_strain<T: Scalar>(l: usize, steps: usize, eps11_max: T, nu: T) -> SymTensor2<T> {
    path_direction(nu).scale(eps11_max * lit(load_factor(l, steps)))
}

/// One CSV row per load step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatPointRow {
    pub step: usize,
    pub eps11: f64,
    pub eps_norm: f64,
    pub surrogate_sigma_vm: f64,
    pub surrogate_eps_p_norm: f64,
    pub classic_sigma_vm: f64,
    pub classic_eps_p_norm: f64,
}

#[derive(Clone, Debug)]
pub struct MatPointCurve<T> {
    pub strain: Vec<SymTensor2<T>>,
    pub surrogate_eps_p: Vec<SymTensor2<T>>,
    pub surrogate_stress: Vec<SymTensor2<T>>,
    pub classic_eps_p: Vec<SymTensor2<T>>,
    pub classic_stress: Vec<SymTensor2<T>>,
    /// Steps where the surrogate Newton solve failed.
    pub surrogate_failures: usize,
}

impl<T: Scalar> MatPointCurve<T> {
    pub fn rows(&self) -> Vec<MatPointRow> {
        (0..self.strain.len())
            .map(|l| MatPointRow {
                step: l,
                eps11: to_f64(self.strain[l].component(0, 0)),
                eps_norm: to_f64(self.strain[l].norm()),
                surrogate_sigma_vm: to_f64(self.surrogate_stress[l].von_mises()),
                surrogate_eps_p_norm: to_f64(self.surrogate_eps_p[l].norm()),
                classic_sigma_vm: to_f64(self.classic_stress[l].von_mises()),
                classic_eps_p_norm: to_f64(self.classic_eps_p[l].norm()),
            })
            .collect()
    }

    /// `∮ σ : dε` of the classic model by the trapezoidal rule.
    pub fn classic_loop_work(&self) -> T {
        loop_work(&self.classic_stress, &self.strain)
    }

    pub fn surrogate_loop_work(&self) -> T {
        loop_work(&self.surrogate_stress, &self.strain)
    }
}

fn loop_work<T: Scalar>(sigma: &[SymTensor2<T>], eps: &[SymTensor2<T>]) -> T {
    let half = lit::<T>(0.5);
    (1..eps.len())
        .map(|l| (sigma[l] + sigma[l - 1]).ddot(&(eps[l] - eps[l - 1])) * half)
        .sum()
}

/// Runs both models along the cycle with `steps` steps at full density.
/// The surrogate is solved without the trial-stress gate, so every step is an
/// independent solve from `ε^p = 0`.
pub fn material_point_run<T: Scalar>(params: &MaterialParams<T>, steps: usize, eps11_max: T) -> MatPointCurve<T> {
    let stiff = elasticity_tensor(params);
    let opts = UpdateOptions {
        gate: T::zero(),
        ..UpdateOptions::default()
    };
    let chi = T::one();
    let mut out = MatPointCurve {
        strain: Vec::with_capacity(steps + 1),
        surrogate_eps_p: Vec::with_capacity(steps + 1),
        surrogate_stress: Vec::with_capacity(steps + 1),
        classic_eps_p: Vec::with_capacity(steps + 1),
        classic_stress: Vec::with_capacity(steps + 1),
        surrogate_failures: 0,
    };
    let mut classic = ClassicState::default();
    for l in 0..=steps {
        let eps = path_strain(l, steps, eps11_max, params.nu);
        let up = update_plastic_strains(&SymTensor2::zero(), &eps, chi, &stiff, params, &opts);
        if up.branch == crate::material::PlasticBranch::Failed {
            out.surrogate_failures += 1;
        }
        classic = classic_update(&classic, &eps, chi, &stiff, params, 1);
        out.strain.push(eps);
        out.surrogate_eps_p.push(up.eps_p);
        out.surrogate_stress.push(stress(&PointState::new(eps, up.eps_p, chi), &stiff));
        out.classic_eps_p.push(classic.eps_p);
        out.classic_stress.push(stress(&PointState::new(eps, classic.eps_p, chi), &stiff));
    }
    out
}
