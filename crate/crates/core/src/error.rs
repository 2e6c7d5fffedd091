use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid undersampled: {0}")]
    GridUndersampled(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("slab partition failed: {0}")]
    PartitionFailed(String),
    #[error("{screens} phase screens supplied for {slabs} slabs")]
    ScreenMismatch { screens: usize, slabs: usize },
    #[error("structure function needs at least 50 screens, got {0}")]
    TooFewScreens(usize),
    #[error("no received field for mode l={0}")]
    MissingMode(i32),
    #[error("unsupported dimension d={0}")]
    UnsupportedDimension(usize),
    #[error("ensemble has zero total survival probability")]
    DegenerateEnsemble,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("density matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),
    #[error("singular channel (gamma_min = {0:e})")]
    SingularChannel(f64),
    #[error("misalignment of {0} m exceeds the grid half-extent")]
    ShiftOutOfRange(f64),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("ensemble store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
