use proptest::prelude::*;
use tto_core::fem::{ElementState, FemModel, LoadCase, SolveOptions, SolverKind};
use tto_core::material::{elasticity_tensor, MaterialParams, PlasticityKind};
use tto_core::mesh::build_box_mesh;
use tto_core::tensor::SymTensor2;

fn affine_model(n: [usize; 3], g: [[f64; 3]; 3]) -> FemModel<f64> {
    let h = 0.1;
    let dims = n.map(|k| k as f64 * h);
    let mesh = build_box_mesh(dims, h).unwrap();
    let on_surface = |x: &[f64; 3]| (0..3).any(|d| x[d] < 1e-12 || x[d] > dims[d] - 1e-12);
    let boundary = mesh.nodes_where(on_surface);
    let mut load = LoadCase::new();
    for &node in &boundary {
        let x = mesh.nodes[node];
        for d in 0..3 {
            load.prescribe(&[node], d, (0..3).map(|k| g[d][k] * x[k]).sum());
        }
    }
    let p = MaterialParams::steel(PlasticityKind::Elastic);
    FemModel::new(mesh, elasticity_tensor(&p), &load).unwrap()
}

fn gradient() -> impl Strategy<Value = [[f64; 3]; 3]> {
    prop::array::uniform3(prop::array::uniform3(-1e-3f64..1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Affine displacements on the boundary of a homogeneous block are
    /// reproduced exactly in the interior.
    #[test]
    fn patch_test(nx in 3usize..5, ny in 3usize..5, nz in 3usize..5, g in gradient(),
                  chi in 0.01f64..=1.0, pcg in any::<bool>()) {
        let model = affine_model([nx, ny, nz], g);
        let ne = model.mesh.n_elements();
        let opts = SolveOptions {
            solver: if pcg { SolverKind::Pcg } else { SolverKind::Direct },
            pcg_tol: 1e-13,
            ..SolveOptions::default()
        };
        let solver = model.factorize(&vec![chi; ne], &opts).unwrap();
        let states = vec![ElementState::new(chi); ne];
        let sol = model.solve_displacements(&states, &solver, &opts).unwrap();
        let gmax = g.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        for (node, x) in model.mesh.nodes.iter().enumerate() {
            for d in 0..3 {
                let exact: f64 = (0..3).map(|k| g[d][k] * x[k]).sum();
                prop_assert!((sol.u[3 * node + d] - exact).abs() <= 1e-9 * gmax);
            }
        }
        let sym = SymTensor2::from_matrix(std::array::from_fn(|i| {
            std::array::from_fn(|j| 0.5 * (g[i][j] + g[j][i]))
        }));
        for e in 0..ne {
            for eps in model.element_strains(&sol.u, e) {
                prop_assert!((eps - sym).max_abs() <= 1e-8 * gmax);
            }
        }
        for s in FemModel::force_balance(&sol.f_int) {
            let fmax = sol.f_int.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(s.abs() <= 1e-9 * fmax.max(1e-30));
        }
    }

    /// With frozen plastic strains the response is affine in the prescribed values.
    #[test]
    fn response_scales_with_load(g in gradient(), factor in 0.1f64..10.0) {
        let model = affine_model([3, 3, 3], g);
        let scaled = model.with_load_factor(factor);
        let ne = model.mesh.n_elements();
        let opts = SolveOptions::default();
        let states = vec![ElementState::new(0.5); ne];
        let a = model
            .solve_displacements(&states, &model.factorize(&vec![0.5; ne], &opts).unwrap(), &opts)
            .unwrap();
        let b = scaled
            .solve_displacements(&states, &scaled.factorize(&vec![0.5; ne], &opts).unwrap(), &opts)
            .unwrap();
        let umax = a.u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
        for (x, y) in a.u.iter().zip(&b.u) {
            prop_assert!((factor * x - y).abs() <= 1e-9 * factor * umax);
        }
    }
}
