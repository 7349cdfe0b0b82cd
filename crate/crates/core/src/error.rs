use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A matrix or dataset was built from inconsistent dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A feature or target value is NaN or infinite.
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite {
        /// 0-based row.
        row: usize,
        /// 0-based column; the target column is reported as the feature count.
        column: usize,
    },
    /// A classification target other than -1 or +1.
    #[error("invalid class label {value} at row {row}")]
    InvalidLabel {
        /// 0-based row.
        row: usize,
        /// Offending value.
        value: f64,
    },
    /// Both classes are required but only one is present.
    #[error("single-class targets: both -1 and +1 are required")]
    SingleClass,
    /// Loss and task kind do not go together.
    #[error("loss {loss} is incompatible with a {task} task")]
    IncompatibleLoss {
        /// Loss name.
        loss: &'static str,
        /// Task name.
        task: &'static str,
    },
    /// A configuration value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An iteration index beyond the model size.
    #[error("iteration {requested} out of range 0..={available}")]
    IterationOutOfRange {
        /// Requested iteration.
        requested: usize,
        /// Number of trees in the model.
        available: usize,
    },
    /// A structurally invalid tree or model.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// A trace without a validation curve.
    #[error("training trace has no validation curve")]
    MissingValidation,
}

/// Shorthand for results carrying [`Error`].
pub type Result<T> = core::result::Result<T, Error>;
