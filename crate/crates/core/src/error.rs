use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh: dimension along {axis} axis ({dim}) is not an integer multiple of the element size {e_size}")]
    NonDivisibleDimension { axis: char, dim: f64, e_size: f64 },

    #[error("mesh: {0}")]
    InvalidMesh(String),

    #[error("material: {0}")]
    InvalidMaterial(String),

    #[error("material: vanishing stress deviator, surrogate residual is singular")]
    SingularDeviator,

    #[error("material: Newton iteration did not converge after {iterations} iterations (max |s| = {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("fem: {0}")]
    Fem(String),

    #[error("fem: stiffness matrix is not positive definite at equation {equation}")]
    SingularSystem { equation: usize },

    #[error("density: prescribed volume fraction {v0} is not attainable with chi_min = {chi_min}")]
    UnreachableVolume { v0: f64, chi_min: f64 },

    #[error("stiffness metric undefined: f·u vanishes")]
    DegenerateLoad,

    #[error("config: {0}")]
    Config(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
