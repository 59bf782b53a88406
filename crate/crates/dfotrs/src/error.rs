use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum DfoError {
    /// A configuration value is out of range or inconsistent with the
    /// problem (bad radii, pivot threshold above its certified cap, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The starting point violates the box constraints.
    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),

    /// The evaluation budget cannot cover one interpolation model.
    #[error("budget {budget} cannot cover one model of {required} element evaluations")]
    BudgetTooSmall { budget: u64, required: u64 },

    /// An oracle returned a non-finite value where the solver cannot
    /// recover (interpolation-point values must be finite).
    #[error("non-finite element value at an interpolation point (element {element})")]
    NonFiniteValue { element: usize },

    /// Geometry routines could not complete a certified interpolation
    /// set. Unreachable when the pivot threshold respects its cap.
    #[error("interpolation set construction failed: {0}")]
    Geometry(String),

    /// A text file (history, instance, config, report) failed to parse.
    /// The message names the offending line.
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Underlying I/O failure.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DfoError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DfoError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        DfoError::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }
}
