//! File formats, benchmark harness and command-line plumbing around
//! [`agb_core`].
//!
//! * [`csv_io`]: numeric CSV datasets with a header row.
//! * [`model_file`]: the versioned TOML model format.
//! * [`trace_file`]: per-iteration risk curves as CSV.
//! * [`bench`](mod@bench): the replicated train/validate/test grid over shrinkage values.

pub mod bench;
pub mod csv_io;
mod error;
pub mod model_file;
pub mod trace_file;
mod write;

pub use error::{Error, Result};
