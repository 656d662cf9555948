use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown symbol `{name}` at offset {offset}")]
    UnknownSymbol { name: String, offset: usize },

    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),

    #[error("no numeric binding for opaque function `{0}`")]
    MissingBinding(String),

    #[error("division by zero in `{0}`")]
    DivisionByZero(String),

    #[error("non-finite value while evaluating `{0}`")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point {point:?} lies outside the chart bounds")]
    OutOfBounds { point: Vec<f64> },

    #[error("metric is degenerate or has the wrong signature at {point:?}: {detail}")]
    Signature { point: Vec<f64>, detail: String },

    #[error("symbolic metric determinant vanishes identically")]
    SingularMetric,

    #[error("rank deficiency at {point:?}: expected rank {expected}, found {found}")]
    RankDeficient {
        point: Vec<f64>,
        expected: usize,
        found: usize,
    },

    #[error("gauge mismatch between tractors")]
    GaugeMismatch,

    #[error("distribution is not totally lightlike: {0}")]
    NotLightlike(String),

    #[error("one-form is not closed: |d theta| = {residual:e} at {point:?}")]
    NotClosed { point: Vec<f64>, residual: f64 },

    #[error("unsupported Clifford signature ({0}, {1})")]
    UnsupportedSignature(usize, usize),

    #[error("spinor is zero")]
    ZeroSpinor,

    #[error("pseudo-Gram-Schmidt breakdown at {point:?} (pivot {pivot:e})")]
    FrameBreakdown { point: Vec<f64>, pivot: f64 },

    #[error("Walker constraint violated: {0}")]
    Constraint(String),

    #[error("no parallel spinor in the constant-component ansatz (smallest singular value {0:e})")]
    NoParallelSpinor(f64),

    #[error("twistor equation fails: residual {0:e}")]
    NotTwistor(f64),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
