use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ellipticity violated at node {node}: smallest eigenvalue {min_eigenvalue} < floor {theta}")]
    Ellipticity {
        node: usize,
        min_eigenvalue: f64,
        theta: f64,
    },

    #[error("recipe `{recipe}` cannot be used in dimension {dim}")]
    RecipeDimension { recipe: &'static str, dim: usize },

    #[error("shift {0:?} is not an integer multiple of the grid spacing")]
    OffGridShift(Vec<f64>),

    #[error("grid has {nodes} nodes per axis, fewer than the {annuli} requested annuli")]
    TooFewNodes { nodes: usize, annuli: usize },

    #[error("operator asymmetry {0:e} exceeds tolerance")]
    Asymmetric(f64),

    #[error("translated operator differs from permuted operator at ({row}, {col})")]
    ConjugationMismatch { row: usize, col: usize },

    #[error("matrix size {n} exceeds the eigensolver cap {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("function is not finite at eigenvalue {0}")]
    NonFinite(f64),

    #[error("Bernstein inequality violated: ratio {ratio} at power {power}")]
    Bernstein { power: u32, ratio: f64 },

    #[error("dyadic heat bound violated at node {node} for t = {t}: lhs {lhs} > rhs {rhs}")]
    DyadicBound { node: usize, t: f64, lhs: f64, rhs: f64 },

    #[error("radius {radius} exceeds the cap {cap}")]
    RadiusCap { radius: f64, cap: f64 },

    #[error("nonpositive weight {value} at node {node}")]
    NonPositiveWeight { node: usize, value: f64 },

    #[error("point generation failed: {0}")]
    PointGeneration(String),

    #[error("invalid point set: {0}")]
    InvalidPoints(String),

    #[error("density predicates disagree at radius {radius}: D0 = {d0}, D_mu/tr = {ratio}")]
    PredicateDisagreement { radius: f64, d0: f64, ratio: f64 },

    #[error("Sobolev order s = {s} must exceed d/2 = {half_dim}")]
    SobolevOrder { s: f64, half_dim: f64 },

    #[error("spectral band is empty")]
    EmptyBand,

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("offset {0} lies inside the bump support")]
    OffsetInBump(f64),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors raised by a failing numerical check (as opposed to bad input).
    pub fn is_check_failure(&self) -> bool {
        matches!(
            self,
            Error::Asymmetric(_)
                | Error::ConjugationMismatch { .. }
                | Error::Bernstein { .. }
                | Error::DyadicBound { .. }
                | Error::PredicateDisagreement { .. }
                | Error::Eigensolver(_)
                | Error::CheckFailed(_)
        )
    }

    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::SizeCap { .. })
    }
}
