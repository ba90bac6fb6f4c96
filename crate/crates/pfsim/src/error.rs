use crate::lattice::SiteCoord;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("sites {0:?} and {1:?} are not adjacent")]
    NotAdjacent(SiteCoord, SiteCoord),
    #[error("site {0:?} is not a boundary site of the domain")]
    NotBoundary(SiteCoord),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("edge configuration connects the red and blue boundary classes")]
    DisconnectionViolated,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("enumeration needs {states} states, above the cap of {cap}")]
    TooLarge { states: f64, cap: f64 },
    #[error("event `{name}` failed certification: {reason}")]
    Certification { name: String, reason: String },
    #[error("unusable estimate: {0}")]
    Unusable(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
