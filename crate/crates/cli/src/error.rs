use halow_core::CoreError;
use halow_nn::NnError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Config,
    Data,
    Numeric,
}

fn nn_class(e: &NnError) -> Class {
    match e {
        NnError::InvalidArgument(_) => Class::Config,
        NnError::NonFinite { .. } => Class::Numeric,
        NnError::ShapeMismatch { .. } | NnError::Format(_) | NnError::Io(_) | NnError::Json(_) => {
            Class::Data
        }
    }
}

impl CliError {
    pub fn class(&self) -> Class {
        match self {
            CliError::Config(_) => Class::Config,
            CliError::Data(_) | CliError::Io(_) | CliError::Json(_) => Class::Data,
            CliError::Core(e) => match e {
                CoreError::InvalidArgument(_) => Class::Config,
                CoreError::Nn(n) => nn_class(n),
                _ => Class::Data,
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            Class::Config => 2,
            Class::Data => 3,
            Class::Numeric => 4,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let kind = match self.class() {
            Class::Config => "config",
            Class::Data => "data",
            Class::Numeric => "numeric",
        };
        json!({"error": {"kind": kind, "code": self.exit_code(), "message": self.to_string()}})
            .to_string()
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        CliError::Core(CoreError::Nn(e))
    }
}
