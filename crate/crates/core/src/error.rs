use thiserror::Error;

/// Errors raised by the simulation, kernel and averaging layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{operation} is not supported for model {model}")]
    Unsupported {
        operation: &'static str,
        model: &'static str,
    },

    #[error("time {t} lies beyond the driver horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("trajectory left the manifold (r <= 0) at t = {time}")]
    ExitedManifold { time: f64 },

    #[error("rotation by {t} is not aligned with a grid of {sites} angular sites")]
    GridAlignment { t: f64, sites: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlParse(#[from] toml::de::Error),

    #[error(transparent)]
    TomlWrite(#[from] toml::ser::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Unsupported { .. } => "unsupported",
            Error::BeyondHorizon { .. } => "beyond-horizon",
            Error::ExitedManifold { .. } => "exited-manifold",
            Error::GridAlignment { .. } => "grid-alignment",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::Validation(_) => "validation",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::TomlParse(_) | Error::TomlWrite(_) => "config-syntax",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {value}")))
    }
}
