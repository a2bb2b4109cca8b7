//! Monte Carlo experiments, analytic curves, CSV output and figure recipes.

pub mod config;
pub mod output;
pub mod pairs;
pub mod reproduce;
pub mod sim;
pub mod svg;

pub use config::{PairKind, SimConfig};
pub use output::{bound_points, write_bound_csv, write_simulate_csv};
pub use pairs::PairSpec;
pub use reproduce::{reproduce, Figure, ReproOptions};
pub use sim::{simulate, McStats};
