use serde::Serialize;

/// Failure category, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Parse,
    Precondition,
    Solver,
}

impl Category {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse => 2,
            Self::Precondition => 3,
            Self::Solver => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, thiserror::Error)]
#[error("{category:?}: {message}")]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl ToString) -> Self {
        Self { category: Category::Parse, message: message.to_string() }
    }

    pub fn precondition(message: impl ToString) -> Self {
        Self { category: Category::Precondition, message: message.to_string() }
    }

    pub fn solver(message: impl ToString) -> Self {
        Self { category: Category::Solver, message: message.to_string() }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl From<hardy_core::Error> for CliError {
    fn from(e: hardy_core::Error) -> Self {
        use hardy_core::Error as E;
        match e {
            E::Divergence { .. } => Self::solver(e),
            E::Csv(_) | E::Json(_) => Self::parse(e),
            _ => Self::precondition(e),
        }
    }
}
