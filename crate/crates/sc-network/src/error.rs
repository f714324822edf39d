//! Network-level errors: data files, manifests, shape checks.

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("shape mismatch in layer {layer} ({detail})")]
    ShapeMismatch { layer: String, detail: String },

    #[error(transparent)]
    Core(#[from] sc_core::Error),
}

pub type Result<T> = std::result::Result<T, NetworkError>;

impl NetworkError {
    pub fn format(msg: impl Into<String>) -> Self {
        NetworkError::Format(msg.into())
    }
}
