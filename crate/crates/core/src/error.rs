use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// Argument outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported winding number {0}: only 0 and 1 are handled")]
    UnsupportedIndex(i64),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("boundary data too wild: {0}")]
    DataTooWild(String),

    #[error("series tail {tail:.3e} exceeds tolerance {tol:.3e} at |z| = {radius}")]
    SeriesTail { tail: f64, tol: f64, radius: f64 },

    #[error("no convergence after {iterations} iterations: {detail}")]
    Convergence { iterations: usize, detail: String },

    #[error("validation failed at {} point(s): {message}", points.len())]
    Validation { message: String, points: Vec<usize> },

    #[error("incompatible data: {0}")]
    Compatibility(String),

    #[error("regularity error: {0}")]
    Regularity(String),

    #[error("map quality error: {0}")]
    MapQuality(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Strips stage wrappers and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
