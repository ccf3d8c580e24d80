mod common;

use common::{random_plastic_strain, steel, tangent_fd_error, LAWS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tto_core::material::{
    classic_return, solve_surrogate, stress, update_plastic_strains, yield_r, NewtonOptions,
    PlasticBranch, PointState, UpdateOptions,
};
use tto_core::tensor::SymTensor2;

fn law() -> impl Strategy<Value = usize> {
    0..LAWS.len()
}

/// Newton settings that resolve the root well below the comparison tolerance
/// for every density.
fn tight(chi: f64) -> NewtonOptions<f64> {
    NewtonOptions { tol: 1e-9 * chi * chi, ..NewtonOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tangent_matches_central_differences(k in law(), seed in any::<u64>(), chi in 0.01f64..=1.0,
                                           pert in 0.0f64..0.1) {
        let (p, e) = steel(LAWS[k]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = random_plastic_strain(&mut rng, &p, &e, 1.2, 30.0);
        let root = solve_surrogate(&eps, chi, &e, &p, &NewtonOptions::default()).unwrap().eps_p;
        let kick = common::random_sym(&mut rng);
        let eps_p = root + kick.scale(pert * root.norm() / kick.norm());
        let err = tangent_fd_error(&eps, &eps_p, chi, &p, &e);
        prop_assert!(err <= 1e-6, "relative error {err:e}");
    }

    #[test]
    fn roots_satisfy_constraints(k in law(), seed in any::<u64>(), chi in 0.01f64..=1.0) {
        let (p, e) = steel(LAWS[k]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = random_plastic_strain(&mut rng, &p, &e, 1.01, 50.0);
        let sol = solve_surrogate(&eps, chi, &e, &p, &NewtonOptions::default()).unwrap();
        let sigma = stress(&PointState::new(eps, sol.eps_p, chi), &e);
        let r = yield_r(sol.eps_p.norm(), chi, &p);
        prop_assert!((sigma.dev().norm() - r).abs() / r <= 1e-6);
        prop_assert!(sol.eps_p.trace().abs() <= 1e-8);
        let tr_lin = e.tensor.dot(&eps).scale(chi.powi(3)).trace();
        prop_assert!((sigma.trace() - tr_lin).abs() <= 1e-6 * sigma.trace().abs() + 1e-9);
    }

    /// A single radial return from the virgin state is the monotone-loading answer.
    #[test]
    fn roots_match_single_step_return(k in law(), seed in any::<u64>(), chi in 0.01f64..=1.0) {
        let (p, e) = steel(LAWS[k]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = random_plastic_strain(&mut rng, &p, &e, 1.05, 50.0);
        let sur = solve_surrogate(&eps, chi, &e, &p, &tight(chi)).unwrap().eps_p;
        let cl = classic_return(&SymTensor2::zero(), 0.0, &eps, chi, &e, &p).eps_p;
        prop_assert!((sur - cl).max_abs() <= 1e-8 * cl.max_abs());
    }

    #[test]
    fn update_ignores_history_without_gate(k in law(), seed in any::<u64>(), chi in 0.01f64..=1.0) {
        let (p, e) = steel(LAWS[k]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = random_plastic_strain(&mut rng, &p, &e, 0.5, 20.0);
        let prev = common::random_sym(&mut rng).scale(0.01);
        let opts = UpdateOptions { gate: 0.0, ..UpdateOptions::default() };
        let a = update_plastic_strains(&prev, &eps, chi, &e, &p, &opts);
        let b = update_plastic_strains(&SymTensor2::zero(), &eps, chi, &e, &p, &opts);
        prop_assert_eq!(a, b);
        prop_assert!(a.branch != PlasticBranch::Failed);
    }

    #[test]
    fn scaled_and_unscaled_newton_agree(k in law(), seed in any::<u64>(), chi in 0.01f64..=1.0) {
        let (p, e) = steel(LAWS[k]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = random_plastic_strain(&mut rng, &p, &e, 1.05, 30.0);
        let scaled = tight(chi);
        let plain = NewtonOptions { scaled: false, tol: 1e-9 * chi.powi(3), ..NewtonOptions::default() };
        let a = solve_surrogate(&eps, chi, &e, &p, &scaled).unwrap().eps_p;
        let b = solve_surrogate(&eps, chi, &e, &p, &plain).unwrap().eps_p;
        prop_assert!((a - b).max_abs() <= 1e-8 * a.max_abs());
    }
}

#[test]
fn below_yield_is_elastic() {
    for kind in LAWS {
        let (p, e) = steel(kind);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let eps = random_plastic_strain(&mut rng, &p, &e, 0.05, 0.99);
            let up = update_plastic_strains(
                &SymTensor2::zero(),
                &eps,
                0.3,
                &e,
                &p,
                &UpdateOptions::default(),
            );
            assert_eq!(up.branch, PlasticBranch::Elastic);
            assert_eq!(up.eps_p, SymTensor2::zero());
        }
    }
}
