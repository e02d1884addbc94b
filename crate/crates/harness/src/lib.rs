//! Configuration, sweep orchestration, CSV persistence and plots for the
//! spinbus simulator.

pub mod config;
pub mod error;
pub mod integrity;
pub mod plot;
pub mod run;
pub mod table;

pub use config::{Experiment, RunConfig};
pub use error::{HarnessError, Result};
pub use plot::{default_plot, plot, PlotKind};
pub use run::run;
pub use table::{Cell, Column, ResultTable};

/// Toolkit name and version written into every table.
pub const VERSION: &str = concat!("spinbus ", env!("CARGO_PKG_VERSION"));
