use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate region: bounds {0}")]
    DegenerateRegion(String),
    #[error("interface height required for mixed lattice kinds")]
    MissingInterface,
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("cell kind {cell} incompatible with lattice kind {lattice}")]
    IncompatibleCellKind { cell: String, lattice: String },
    #[error("transformation {op} incompatible with lattice kind {lattice}")]
    IncompatibleOp { op: String, lattice: String },
    #[error("kernel undefined off the self-dual surface: kappa = {kappa:e}")]
    KernelUndefined { kappa: f64 },
    #[error("no self-dual completion: p2 = {p2} outside [0,1)")]
    NoSelfDualCompletion { p2: f64 },
    #[error("no parameter rule for edge class {0}")]
    MissingParamRule(String),
    #[error("height profile has no entry for row {0}")]
    ProfileRowMissing(i64),
    #[error("parameter spec incompatible with lattice kind {0}")]
    IncompatibleParamSpec(String),
    #[error("box exceeds lattice bounds")]
    BoxOutOfBounds,
    #[error("too many edges for exhaustive enumeration: {got} > {cap}")]
    TooManyEdges { got: usize, cap: usize },
    #[error("patch too small for drift margin: {0}")]
    PatchTooSmall(String),
    #[error("path is not open in the given configuration")]
    PathNotOpen,
    #[error("path leaves the lattice: {0}")]
    InvalidPath(String),
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
