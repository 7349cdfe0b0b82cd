//! Risk curves as CSV with columns `t,train_risk,val_risk`.
//!
//! `val_risk` is left empty when training had no validation set.

use std::path::Path;

use agb_core::boosting::TrainTrace;

use crate::write::atomic_write;
use crate::Result;

/// Renders a trace, one row per iterate `t = 0..=T`.
pub fn to_csv_string(trace: &TrainTrace) -> String {
    let mut out = String::from("t,train_risk,val_risk\n");
    for (t, r) in trace.train_risk.iter().enumerate() {
        let val = trace
            .val_risk
            .as_ref()
            .map(|v| v[t].to_string())
            .unwrap_or_default();
        out.push_str(&format!("{t},{r},{val}\n"));
    }
    out
}

/// Writes a trace atomically.
pub fn save(trace: &TrainTrace, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), to_csv_string(trace).as_bytes())
}
