use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid family spec `{spec}`: {reason}")]
    FamilySpec { spec: String, reason: String },

    #[error("n = {n} exceeds the sampler cap {cap}; raise it with CONDMAP_CAP_N or --cap")]
    CapExceeded { n: usize, cap: usize },

    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("label rule violated: {0}")]
    LabelRule(String),

    #[error("map is not bipartite")]
    NotBipartite,

    #[error("weights are not admissible: {0}")]
    NotAdmissible(String),

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
