//! Configuration and result files.

pub mod config;
pub mod output;
pub mod vtk;

pub use config::ConfigSource;
pub use output::RunWriter;
pub use vtk::VtkGrid;
