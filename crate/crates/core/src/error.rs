use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error("no person detected in {path}")]
    NoPersonDetected { path: PathBuf },

    #[error("unsupported bit depth {depth} in {path} (expected 8-bit)")]
    UnsupportedBitDepth { path: PathBuf, depth: u8 },

    #[error("densepose part index {value} out of range (max 24) in {path}")]
    PartIndexOutOfRange { path: PathBuf, value: u8 },

    #[error("unknown role `{0}`")]
    UnknownRole(String),

    #[error("dimension mismatch: {what} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        what: String,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("missing waist keypoint: {0}")]
    MissingWaistKeypoint(&'static str),

    #[error("missing shoulder keypoint: {0}")]
    MissingShoulderKeypoint(&'static str),

    #[error("no upper-clothes pixels between the shoulders")]
    EmptyTorsoRegion,

    #[error("no sample yielded a defined torso ratio ({skipped} skipped)")]
    NoValidSamples { skipped: usize },

    #[error("upper-body area is zero")]
    ZeroBodyArea,

    #[error("clothing and body regions do not overlap")]
    DegenerateOverlap,

    #[error("clothing region is empty")]
    EmptyClothing,

    #[error("missing core keypoints: {0}")]
    MissingCoreKeypoints(&'static str),

    #[error("no active skeleton nodes to compare")]
    NoActiveNodes,

    #[error("feature backend failure: {0}")]
    BackendFailure(String),

    #[error("failed to load model {path}: {reason}")]
    ModelLoadFailure { path: PathBuf, reason: String },

    #[error("model exposes {got} outputs, expected 5")]
    WrongOutputArity { got: usize },

    #[error("duplicate sample ids: {0:?}")]
    DuplicateIds(Vec<String>),

    #[error("dataset resolution failed, {} missing file(s): {}", missing.len(), display_paths(missing))]
    DatasetResolutionFailure { missing: Vec<PathBuf> },

    #[error("empty pool: {0}")]
    EmptyPool(&'static str),

    #[error("serialization failure: {0}")]
    SerializationFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn display_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::MalformedFile {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn dims(
        what: impl Into<String>,
        want: (usize, usize),
        got: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            want_w: want.0,
            want_h: want.1,
            got_w: got.0,
            got_h: got.1,
        }
    }

    /// True when the error stems from user-supplied input rather than an
    /// internal fault. The CLI maps this to its exit status.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::BackendFailure(_))
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedFile { .. } => "MalformedFile",
            Error::NoPersonDetected { .. } => "NoPersonDetected",
            Error::UnsupportedBitDepth { .. } => "UnsupportedBitDepth",
            Error::PartIndexOutOfRange { .. } => "PartIndexOutOfRange",
            Error::UnknownRole(_) => "UnknownRole",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::MissingWaistKeypoint(_) => "MissingWaistKeypoint",
            Error::MissingShoulderKeypoint(_) => "MissingShoulderKeypoint",
            Error::EmptyTorsoRegion => "EmptyTorsoRegion",
            Error::NoValidSamples { .. } => "NoValidSamples",
            Error::ZeroBodyArea => "ZeroBodyArea",
            Error::DegenerateOverlap => "DegenerateOverlap",
            Error::EmptyClothing => "EmptyClothing",
            Error::MissingCoreKeypoints(_) => "MissingCoreKeypoints",
            Error::NoActiveNodes => "NoActiveNodes",
            Error::BackendFailure(_) => "BackendFailure",
            Error::ModelLoadFailure { .. } => "ModelLoadFailure",
            Error::WrongOutputArity { .. } => "WrongOutputArity",
            Error::DuplicateIds(_) => "DuplicateIds",
            Error::DatasetResolutionFailure { .. } => "DatasetResolutionFailure",
            Error::EmptyPool(_) => "EmptyPool",
            Error::SerializationFailure(_) => "SerializationFailure",
            Error::InvalidParams(_) => "InvalidParams",
            Error::Io { .. } => "Io",
        }
    }
}
