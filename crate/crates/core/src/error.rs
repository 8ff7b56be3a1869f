use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants are grouped so the CLI can map them onto its three exit codes:
/// invalid input, dimension limits, and numerical failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScarError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("parity violation: {0}")]
    Parity(String),

    #[error("trivial move W{sign}({a},{b}): {reason}")]
    TrivialMove {
        sign: char,
        a: usize,
        b: usize,
        reason: String,
    },

    #[error("bitstring {0:#b} is not in the blockaded basis")]
    NotInBasis(u64),

    #[error("basis does not belong to the given graph")]
    BasisMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension limit exceeded: {what} is {size}, limit {limit}")]
    DimensionLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("operator is not Hermitian")]
    NotHermitian,

    #[error("density matrix has eigenvalue {0:e} below the PSD tolerance")]
    NotPositive(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("symmetry {0} is not defined for this geometry")]
    SymmetryUndefined(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("invalid config: {0}")]
    Config(String),
}

impl ScarError {
    /// Stable short tag used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            ScarError::InvalidGraph(_) => "invalid_graph",
            ScarError::InvalidPairing(_) => "invalid_pairing",
            ScarError::UnsupportedGeometry(_) => "unsupported_geometry",
            ScarError::Parity(_) => "parity",
            ScarError::TrivialMove { .. } => "trivial_move",
            ScarError::NotInBasis(_) => "not_in_basis",
            ScarError::BasisMismatch => "basis_mismatch",
            ScarError::DimensionMismatch { .. } => "dimension_mismatch",
            ScarError::VertexOutOfRange { .. } => "vertex_out_of_range",
            ScarError::InvalidArgument(_) => "invalid_argument",
            ScarError::DimensionLimit { .. } => "dimension_limit",
            ScarError::NotHermitian => "not_hermitian",
            ScarError::NotPositive(_) => "not_positive",
            ScarError::Numerical(_) => "numerical",
            ScarError::SymmetryUndefined(_) => "symmetry_undefined",
            ScarError::Io(_) => "io",
            ScarError::Config(_) => "config",
        }
    }

    /// Process exit code: 2 for bad input, 3 for size limits, 4 for numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScarError::DimensionLimit { .. } => 3,
            ScarError::NotHermitian
            | ScarError::NotPositive(_)
            | ScarError::Numerical(_)
            | ScarError::NotInBasis(_) => 4,
            ScarError::Io(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for ScarError {
    fn from(e: std::io::Error) -> Self {
        ScarError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ScarError>;
