use thiserror::Error;

/// CLI failure with a stable machine-readable code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Flags(String),
    #[error("{0}")]
    Kernel(String),
    #[error("{0}")]
    Method(String),
    #[error("{0}")]
    Grid(String),
    #[error("{0}")]
    Csv(String),
    #[error("{0}")]
    Dimension(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Reference(String),
    #[error("{0}")]
    Field(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Flags(_) => "E_FLAGS",
            CliError::Kernel(_) => "E_KERNEL",
            CliError::Method(_) => "E_METHOD",
            CliError::Grid(_) => "E_GRID",
            CliError::Csv(_) => "E_CSV",
            CliError::Dimension(_) => "E_DIMENSION",
            CliError::Config(_) => "E_CONFIG",
            CliError::Io(_) => "E_IO",
            CliError::Reference(_) => "E_REFERENCE",
            CliError::Field(_) => "E_FIELD",
            CliError::Numeric(_) => "E_NUMERIC",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Flags(_) => 2,
            CliError::Kernel(_) => 3,
            CliError::Method(_) => 4,
            CliError::Grid(_) => 5,
            CliError::Csv(_) => 6,
            CliError::Dimension(_) => 7,
            CliError::Config(_) => 8,
            CliError::Io(_) => 9,
            CliError::Reference(_) => 10,
            CliError::Field(_) => 11,
            CliError::Numeric(_) => 12,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.code(), "message": self.to_string() })
    }
}

impl From<csfmm::Error> for CliError {
    fn from(e: csfmm::Error) -> Self {
        use csfmm::Error as E;
        let msg = e.to_string();
        match e {
            E::LengthMismatch { .. } => CliError::Dimension(msg),
            E::UnsupportedGrid(_) => CliError::Grid(msg),
            E::InputFormat(_) => CliError::Csv(msg),
            E::Config(_) => CliError::Config(msg),
            _ => CliError::Numeric(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Csv(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
