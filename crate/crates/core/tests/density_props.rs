use proptest::prelude::*;
use tto_core::density::{driving_force, laplacian, update_density, DensityField, DensityParams};
use tto_core::mesh::{build_box_mesh, Mesh};

fn mesh() -> Mesh<f64> {
    build_box_mesh([0.6, 0.4, 0.2], 0.1).unwrap()
}

fn field(chi: Vec<f64>, v0: f64, beta: f64) -> DensityField<f64> {
    DensityField {
        chi,
        params: DensityParams::new(v0, beta, 15.0),
    }
}

/// Densities in [χ_min, 1] rescaled to the mean `v0`, bounds respected.
fn chi_with_mean(raw: &[f64], v0: f64) -> Vec<f64> {
    let mut chi: Vec<f64> = raw.iter().map(|r| 0.001 + 0.999 * r).collect();
    for _ in 0..200 {
        let mean = chi.iter().sum::<f64>() / chi.len() as f64;
        let shift = v0 - mean;
        if shift.abs() < 1e-15 {
            break;
        }
        chi.iter_mut().for_each(|c| *c = (*c + shift).clamp(0.001, 1.0));
    }
    chi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn volume_is_conserved_and_bounds_hold(
        raw in prop::collection::vec(0.0f64..1.0, 48),
        p in prop::collection::vec(-5.0f64..5.0, 48),
        v0 in 0.1f64..0.9,
        beta in 0.0f64..0.05,
    ) {
        let m = mesh();
        let f = field(chi_with_mean(&raw, v0), v0, beta);
        let mut cur = f;
        for _ in 0..5 {
            let up = update_density(&cur, &p, &m).unwrap();
            let v = up.field.volume(&m);
            let target = v0 * m.volume;
            prop_assert!(((v - target) / target).abs() <= 1e-9, "volume {v} vs {target}");
            prop_assert!(up.field.chi.iter().all(|&c| (0.001..=1.0).contains(&c)));
            cur = up.field;
        }
    }

    #[test]
    fn more_drive_never_lowers_density(
        raw in prop::collection::vec(0.0f64..1.0, 48),
        p in prop::collection::vec(-3.0f64..3.0, 48),
        e in 0usize..48,
        extra in 0.0f64..4.0,
    ) {
        let m = mesh();
        let f = field(chi_with_mean(&raw, 0.4), 0.4, 0.01);
        let a = update_density(&f, &p, &m).unwrap();
        let mut q = p.clone();
        q[e] -= extra;
        let b = update_density(&f, &q, &m).unwrap();
        prop_assert!(b.field.chi[e] >= a.field.chi[e] - 1e-12);
    }

    #[test]
    fn laplacian_has_zero_total_flux(raw in prop::collection::vec(0.0f64..1.0, 48)) {
        let m = mesh();
        let lap = laplacian(&raw, &m);
        let total: f64 = lap.iter().sum();
        let scale: f64 = lap.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!(total.abs() <= 1e-12 * scale);
    }

    #[test]
    fn uniform_field_is_a_fixed_point(v0 in 0.05f64..0.95, p in -10.0f64..10.0, beta in 0.0f64..0.1) {
        let m = mesh();
        let f = field(vec![v0; 48], v0, beta);
        let up = update_density(&f, &[p; 48], &m).unwrap();
        prop_assert!(up.field.chi.iter().all(|&c| (c - v0).abs() <= 1e-12));
    }

    #[test]
    fn normalized_force_is_scale_free(
        raw in prop::collection::vec(0.01f64..0.99, 48),
        psi in prop::collection::vec(0.0f64..3.0, 48),
        k in 0.1f64..100.0,
    ) {
        let a = driving_force(&raw, &psi, 0.001);
        let scaled: Vec<f64> = psi.iter().map(|x| x * k).collect();
        let b = driving_force(&raw, &scaled, 0.001);
        for (x, y) in a.p_bar.iter().zip(&b.p_bar) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn neighbours_are_symmetric_and_face_adjacent() {
    let m = mesh();
    for (e, nb) in m.neighbors.iter().enumerate() {
        assert!((3..=6).contains(&nb.len()));
        for &f in nb {
            assert!(m.neighbors[f].contains(&e));
            let (a, b) = (m.element_grid_index(e), m.element_grid_index(f));
            let dist: usize = (0..3).map(|k| a[k].abs_diff(b[k])).sum();
            assert_eq!(dist, 1);
        }
    }
}

#[test]
fn two_element_split() {
    let m = build_box_mesh([0.2, 0.1, 0.1], 0.1).unwrap();
    let f = field(vec![0.5, 0.5], 0.5, 0.0);
    let up = update_density(&f, &[2.0, 0.0], &m).unwrap();
    assert!((up.lambda - 1.0).abs() < 1e-9);
    assert!((up.field.chi[0] - (0.5 - 1.0 / 15.0)).abs() < 1e-12);
    assert!((up.field.chi[1] - (0.5 + 1.0 / 15.0)).abs() < 1e-12);
}
