//! Thermodynamic topology optimization with a dissipation-free surrogate
//! plasticity model on structured hexahedral meshes.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the command-line driver uses.

pub mod analysis;
pub mod density;
pub mod error;
pub mod fem;
pub mod femcheck;
pub mod io;
pub mod material;
pub mod matpoint;
pub mod mesh;
pub mod optimizer;
pub mod presets;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use presets::Preset;
pub use scalar::Scalar;

pub type Mesh64 = mesh::Mesh<f64>;
pub type MaterialParams64 = material::MaterialParams<f64>;
pub type FemModel64 = fem::FemModel<f64>;
pub type DensityField64 = density::DensityField<f64>;
pub type RunConfig64 = optimizer::RunConfig<f64>;
pub type Problem64 = optimizer::Problem<f64>;
pub type OptState64 = optimizer::OptState<f64>;
pub type SymTensor64 = tensor::SymTensor2<f64>;
