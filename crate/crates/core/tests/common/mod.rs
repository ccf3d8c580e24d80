#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tto_core::material::{
    elasticity_tensor, surrogate_residual, surrogate_tangent, MaterialParams, PlasticityKind,
    PointState, StiffnessTensor,
};
use tto_core::tensor::SymTensor2;

pub const LAWS: [PlasticityKind; 3] = [
    PlasticityKind::Ideal,
    PlasticityKind::Linear,
    PlasticityKind::Exponential,
];

pub fn steel(kind: PlasticityKind) -> (MaterialParams<f64>, StiffnessTensor<f64>) {
    let p = MaterialParams::steel(kind);
    (p, elasticity_tensor(&p))
}

/// `‖dev ε‖` at which yielding starts (independent of χ).
pub fn yield_dev_strain(p: &MaterialParams<f64>, e: &StiffnessTensor<f64>) -> f64 {
    p.sigma_y() / (2.0 * e.mu)
}

pub fn random_sym(rng: &mut ChaCha8Rng) -> SymTensor2<f64> {
    SymTensor2::from_matrix({
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = rng.gen_range(-1.0..1.0);
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    })
}

/// Random strain whose deviator exceeds the yield strain by `[lo, hi]` times,
/// with a volumetric part of comparable size.
pub fn random_plastic_strain(
    rng: &mut ChaCha8Rng,
    p: &MaterialParams<f64>,
    e: &StiffnessTensor<f64>,
    lo: f64,
    hi: f64,
) -> SymTensor2<f64> {
    let ey = yield_dev_strain(p, e);
    let mut d = random_sym(rng).dev();
    while d.norm() < 1e-3 {
        d = random_sym(rng).dev();
    }
    let factor = lo * (hi / lo).powf(rng.gen::<f64>());
    let vol = rng.gen_range(-1.0..1.0) * ey;
    d.scale(factor * ey / d.norm()) + SymTensor2::identity().scale(vol)
}

/// Largest entry-wise gap between `∂s/∂ε^p` and central differences,
/// relative to the largest tangent entry.
pub fn tangent_fd_error(
    eps: &SymTensor2<f64>,
    eps_p: &SymTensor2<f64>,
    chi: f64,
    p: &MaterialParams<f64>,
    e: &StiffnessTensor<f64>,
) -> f64 {
    let st = PointState::new(*eps, *eps_p, chi);
    let j = surrogate_tangent(&st, e, p).unwrap().ds;
    let h = 1e-6 * eps_p.norm().max(1e-4);
    let mut worst: f64 = 0.0;
    for k in 0..6 {
        let mut xp = *eps_p;
        let mut xm = *eps_p;
        xp[k] += h;
        xm[k] -= h;
        let sp = surrogate_residual(&PointState::new(*eps, xp, chi), e, p).unwrap().s;
        let sm = surrogate_residual(&PointState::new(*eps, xm, chi), e, p).unwrap().s;
        let col = (sp - sm).scale(0.5 / h);
        for i in 0..6 {
            worst = worst.max((col[i] - j.0[i][k]).abs());
        }
    }
    worst / j.max_abs()
}
