//! Config files, field snapshots, run directories and VTK output.

pub mod config;
pub mod fieldfile;
pub mod report;
pub mod trajectory;
pub mod vtk;

pub use config::{load_config, parse_config, Config};
pub use report::{parse_report, Report};
pub use trajectory::{read_trajectory_dir, write_trajectory_dir};
