//! Run artifacts: convergence log, field snapshots and the manifest.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::to_entries;
use super::vtk::VtkGrid;
use crate::error::{Error, Result};
use crate::optimizer::{IterationRecord, Observer, OptState, Problem, RunConfig, RunOutcome, RunStatus};
use crate::scalar::Scalar;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const LOG_FILE: &str = "convergence.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FINAL_FIELDS_FILE: &str = "fields_final.vtk";

/// Field file of the current state: cell data `chi`, `psi0`, `eps_p_vm`,
/// point data `displacement`.
pub fn state_grid<T: Scalar>(problem: &Problem<T>, state: &OptState<T>) -> VtkGrid {
    let mut g = VtkGrid::from_mesh(&problem.model.mesh, &format!("tto iteration {}", state.iteration));
    g.add_cell_scalar("chi", &state.density.chi)
        .add_cell_scalar("psi0", &state.psi0)
        .add_cell_scalar("eps_p_vm", &state.plastic_von_mises())
        .add_point_vector("displacement", &state.u);
    g
}

pub fn snapshot_name(iteration: usize) -> String {
    format!("fields_{iteration:04}.vtk")
}

/// Streams the convergence log and periodic snapshots into `dir`.
pub struct RunWriter {
    dir: PathBuf,
    log: csv::Writer<File>,
    snapshot_every: usize,
    files: Vec<String>,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

impl RunWriter {
    pub fn create(dir: &Path, snapshot_every: usize) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOG_FILE);
        let log = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            log,
            snapshot_every,
            files: vec![LOG_FILE.to_string()],
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes the final fields and the manifest.
    pub fn finish<T: Scalar>(
        &mut self,
        cfg: &RunConfig<T>,
        problem: &Problem<T>,
        outcome: &RunOutcome<T>,
    ) -> Result<PathBuf> {
        let path = self.dir.join(LOG_FILE);
        self.log.flush().map_err(|e| Error::io(&path, e))?;
        state_grid(problem, &outcome.state).write(&self.dir.join(FINAL_FIELDS_FILE))?;
        self.files.push(FINAL_FIELDS_FILE.to_string());
        let manifest = manifest(cfg, outcome, &self.files);
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

impl<T: Scalar> Observer<T> for RunWriter {
    fn on_iteration(&mut self, problem: &Problem<T>, state: &OptState<T>, record: &IterationRecord) -> Result<()> {
        let path = self.dir.join(LOG_FILE);
        self.log.serialize(record).map_err(|e| csv_error(&path, e))?;
        self.log.flush().map_err(|e| Error::io(&path, e))?;
        if self.snapshot_every > 0 && record.iteration % self.snapshot_every == 0 {
            let name = snapshot_name(record.iteration);
            state_grid(problem, state).write(&self.dir.join(&name))?;
            self.files.push(name);
        }
        Ok(())
    }
}

/// Machine-readable summary: code version, resolved configuration and outcome.
pub fn manifest<T: Scalar>(cfg: &RunConfig<T>, outcome: &RunOutcome<T>, files: &[String]) -> serde_json::Value {
    let config: serde_json::Map<String, serde_json::Value> = to_entries(cfg)
        .into_iter()
        .map(|(k, v)| (k, serde_json::Value::String(v)))
        .collect();
    let (status, converged_at) = match outcome.status {
        RunStatus::Converged { iteration } => ("converged", Some(iteration)),
        RunStatus::MaxIterations => ("max_iterations", None),
    };
    let last = outcome.history.last();
    json!({
        "code_version": CODE_VERSION,
        "scalar": std::any::type_name::<T>(),
        "config": config,
        "status": status,
        "converged_iteration": converged_at,
        "iterations": outcome.history.len(),
        "final_stiffness": last.map(|r| r.stiffness),
        "final_volume_error": last.map(|r| r.volume_error),
        "wall_time_s": outcome.history.iter().map(|r| r.wall_time_s).sum::<f64>(),
        "files": files,
    })
}

/// Reads a convergence log back.
pub fn read_log(path: &Path) -> Result<Vec<IterationRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}
