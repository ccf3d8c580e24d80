use tto_core::material::PlasticityKind;
use tto_core::tensor::SymTensor2;
use tto_core::optimizer::{run, Problem, RunConfig, RunStatus};
use tto_core::{Preset, RunConfig64};

fn tiny(plasticity: PlasticityKind) -> RunConfig64 {
    let mut cfg = RunConfig::preset(Preset::ClampedBeam, plasticity);
    cfg.e_size = 0.1;
    cfg.beta = 2.0 * 0.1 * 0.1;
    cfg.max_iterations = 40;
    cfg
}

#[test]
fn full_material_converges_immediately() {
    let mut cfg = tiny(PlasticityKind::Elastic);
    cfg.v0 = 1.0;
    let out = run(&Problem::from_config(&cfg).unwrap(), &mut ()).unwrap();
    assert_eq!(out.status, RunStatus::Converged { iteration: 5 });
    assert!(out.state.density.chi.iter().all(|&c| c == 1.0));
}

#[test]
fn elastic_run_keeps_plastic_strain_zero_and_stiffens() {
    let cfg = tiny(PlasticityKind::Elastic);
    let out = run(&Problem::from_config(&cfg).unwrap(), &mut ()).unwrap();
    for e in &out.state.elements {
        assert!(e.eps_p.iter().all(|x| *x == SymTensor2::zero()));
    }
    assert!(out.history.iter().all(|r| r.plastic_points == 0 && r.volume_error.abs() < 1e-9));
    let first = out.history[0].stiffness;
    let last = out.history.last().unwrap().stiffness;
    assert!(last > first, "{first} -> {last}");
}

#[test]
fn plastic_run_respects_invariants() {
    let cfg = tiny(PlasticityKind::Exponential);
    let out = run(&Problem::from_config(&cfg).unwrap(), &mut ()).unwrap();
    assert!(out.history[0].plastic_points > 0);
    for r in &out.history {
        assert!(r.max_trace_eps_p <= 1e-8);
        assert!(r.volume_error.abs() < 1e-9);
        assert_eq!(r.newton_failures, 0);
    }
    let chi_min = cfg.chi_min;
    assert!(out.state.density.chi.iter().all(|&c| (chi_min..=1.0).contains(&c)));
}
