use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("empty matrix")]
    Empty,
    #[error("defective matrix: raw left/right overlap {overlap:.3e} for eigenvalue {re}{im:+}i")]
    DefectiveMatrix { overlap: f64, re: f64, im: f64 },
    #[error("ambiguous eigenvalue pairing between H and H^T near {re}{im:+}i")]
    AmbiguousPairing { re: f64, im: f64 },
    #[error("ground level near {re}{im:+}i is degenerate (symmetry residual {residual:.1e}); fidelity is undefined")]
    DegenerateGround { re: f64, im: f64, residual: f64 },
    #[error("complex eigenvalue {re}{im:+}i has no conjugate partner")]
    UnpairableSpectrum { re: f64, im: f64 },
    #[error("state {0} has a real eigenvalue and no PT partner")]
    NotBroken(usize),
    #[error("dimension {dim} exceeds cap {cap}")]
    DimTooLarge { dim: usize, cap: usize },
    #[error("quasi-null Krylov vector after {restarts} restarts")]
    QuasiNullBreakdown { restarts: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degenerate energy denominator |E0-En| = {gap:.3e}")]
    DegenerateDenominator { gap: f64 },
    #[error("partner susceptibility deviates from conjugate by {deviation:.3e}")]
    PartnerMismatch { deviation: f64 },
    #[error("both endpoints have the same PT class")]
    NoTransition,
    #[error("epsilon {epsilon:e} endpoints do not straddle the transition")]
    BracketTooWide { epsilon: f64 },
    #[error("momentum k = {k} sits on an exceptional point (delta = {delta:.3e})")]
    AtExceptionalMomentum { k: f64, delta: f64 },
    #[error("broken-branch right-right formula requires u > 0")]
    BrokenBranchZeroU,
    #[error("integration grid crosses an exceptional point")]
    GridCrossesEp,
    #[error("chain length {0} must be even")]
    OddL(usize),
    #[error("basis dimension {dim} exceeds cap {cap}")]
    BasisCapExceeded { dim: usize, cap: usize },
    #[error("need at least {need} sizes, got {got}")]
    InsufficientSizes { need: usize, got: usize },
    #[error("elliptic parameter outside the convergent domain: {0}")]
    EllipticDomain(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("linear algebra backend: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
