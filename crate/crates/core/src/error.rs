use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate {gate}: {reason}")]
    InvalidGate { gate: String, reason: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("gate kind set is empty")]
    EmptyKinds,

    #[error("qubit count {0} is outside the supported range")]
    QubitCount(usize),

    #[error("basis index {index} out of range for {n_qubits} qubits")]
    BasisIndex { index: usize, n_qubits: usize },

    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("truth table is not reversible: {}", format_collisions(.collisions))]
    NotBijective { collisions: Vec<(usize, usize, usize)> },

    #[error("target columns are not orthonormal (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("unknown benchmark {0:?}")]
    UnknownBenchmark(String),

    #[error("frontier of size {0} exceeds the subset enumeration cap of 8")]
    FrontierTooLarge(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite loss {loss} at step {step}")]
    NonFiniteLoss { loss: f64, step: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupt {kind} file: {message}")]
    Corrupt { kind: &'static str, message: String },

    #[error("found circuit does not reproduce the target ({mismatches} basis states differ)")]
    Verification { mismatches: usize },

    #[error("{path}: {source}")]
    Path { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_collisions(collisions: &[(usize, usize, usize)]) -> String {
    collisions
        .iter()
        .map(|(a, b, out)| format!("inputs {a} and {b} both map to {out}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn at_path(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Path { path, source }
    }

    pub(crate) fn corrupt(kind: &'static str, message: impl Into<String>) -> Error {
        Error::Corrupt {
            kind,
            message: message.into(),
        }
    }
}
