use std::path::PathBuf;

/// Errors produced by the simulator, the protocol parties and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(
        "invalid measurement axis: theta={theta}° phi={phi}° (theta must lie in [0, 180] and both must be finite)"
    )]
    InvalidAxis { theta: f64, phi: f64 },

    #[error("state vector for {qubits} qubit(s) needs {expected} amplitudes, got {got}")]
    AmplitudeCount { qubits: usize, expected: usize, got: usize },

    #[error("unsupported qubit count {0} (expected 1, 2 or 3)")]
    QubitCount(usize),

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("amplitude {index} is not finite")]
    NonFinite { index: usize },

    #[error("qubit index {index} out of range for a {qubit_count}-qubit state (indices are 1-based)")]
    QubitIndex { index: usize, qubit_count: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis entry violates family {family} relations: {detail}")]
    FamilyRelation { family: String, detail: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("malformed transcript:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
