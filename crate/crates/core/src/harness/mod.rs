//! Config files, figure presets, parallel runs and CSV/CDF output.

pub mod config;
pub mod presets;
pub mod run;
pub mod table;

pub use config::{load_config, parse_config, resolve_config, ExperimentConfig, Format, Scenario};
pub use run::{run_experiment, run_experiment_with};
pub use table::{emit_cdf, empirical_cdf, ResultRow, ResultTable};
