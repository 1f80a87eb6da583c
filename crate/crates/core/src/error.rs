use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // model structure
    #[error("joint `{joint}` references unknown segment `{segment}`")]
    DanglingReference { joint: String, segment: String },
    #[error("segment `{0}` is the child of more than one joint")]
    DuplicateChild(String),
    #[error("kinematic graph contains a cycle through segment `{0}`")]
    Cycle(String),
    #[error("segment `{0}` is not attached to the tree")]
    Unattached(String),
    #[error("invalid segment `{name}`: {reason}")]
    InvalidSegment { name: String, reason: String },
    #[error("invalid joint `{name}`: {reason}")]
    InvalidJoint { name: String, reason: String },
    #[error("state dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // dynamics
    #[error("articulated inertia of joint `{0}` is singular")]
    SingularInertia(String),
    #[error("mass matrix is not positive definite")]
    MassMatrixNotPd,
    #[error("joint `{joint}` reached the Cardan singularity guard (middle angle {angle:.3} rad)")]
    GimbalGuard { joint: String, angle: f64 },

    // geometry / contact
    #[error("degenerate ellipsoid semi-axes {0:?}")]
    DegenerateEllipsoid([f64; 3]),
    #[error("coincident ellipsoid centers")]
    CoincidentCenters,

    // body model
    #[error("invalid anthropometry: {0}")]
    InvalidAnthropometry(String),
    #[error("initial interpenetration of {depth:.4} m in contact `{pair}` exceeds 5 mm")]
    InitialPenetration { pair: String, depth: f64 },

    // control
    #[error("controller references have not been captured")]
    ReferencesNotCaptured,

    // simulation
    #[error("invalid excitation: {0}")]
    InvalidExcitation(String),
    #[error("simulation diverged at t = {time:.4} s: first non-finite channel `{channel}`")]
    Diverged { time: f64, channel: String },
    #[error("restart snapshot model hash {found} does not match model hash {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("restart snapshot format version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    // analysis
    #[error("series too short: {len} samples for window length {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input has zero power in the analysis band")]
    ZeroInputPower,
    #[error("missing channel `{0}`")]
    MissingChannel(String),

    // calibration
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("evaluation budget {budget} is below the minimum of {min}")]
    BudgetTooSmall { budget: usize, min: usize },
    #[error("reference data does not cover the configured band: {0}")]
    BandMismatch(String),
    #[error("no stable evaluation within the budget")]
    NoStableEvaluation,

    // configuration and I/O
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed data in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
