use std::path::Path;
use std::process::{Command, Output};

fn tto(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tto"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

#[test]
fn budget_exhausted_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = tto(
        &["run", "--bvp", "clamped_beam", "--plasticity", "ideal", "--loops", "1", "--esize-mm", "0.1",
          "--max-iters", "3", "--quiet", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").is_file());
    assert!(out.join("convergence.csv").is_file());
    assert!(out.join("fields_final.vtk").is_file());
}

#[test]
fn converged_run_exits_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = tto(
        &["run", "--plasticity", "elastic", "--v0", "1", "--esize-mm", "0.1", "--quiet"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("converged at iteration 5"));
    assert!(dir.path().join("runs/clamped_beam_elastic_loops1/manifest.json").is_file());
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--set", "colour=blue"][..],
        &["run", "--bvp", "bridge"],
        &["run", "--loops", "9"],
        &["run", "--plasticity", "elastic", "--set", "h_mpa=10"],
        &["matpoint", "--plasticity", "plastic"],
        &["femcheck", "--bvp", "material_point"],
    ] {
        let o = tto(args, dir.path());
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn matpoint_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let o = tto(&["matpoint", "--plasticity", "linear", "--out", csv.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("step,eps11,"));
    assert_eq!(lines.count(), 101);

    let o = tto(&["matpoint"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 102);
}
