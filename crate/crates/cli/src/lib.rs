//! Input loading, run configuration and report rendering for the `ratiolab`
//! command-line tool.

pub mod config;
pub mod error;
pub mod input;
pub mod report;

pub use config::{RawConfig, RunConfig};
pub use error::{CliError, CliResult, ErrorKind};
pub use input::{load_population, load_v_fixture};
pub use report::{render_records, render_text, run_report, MseReport};
