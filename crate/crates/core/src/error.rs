use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register of {0} qubits exceeds the {max}-qubit limit", max = crate::state::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("site {site} out of range for a {n}-qubit register")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("sites must be distinct, got {0:?}")]
    DuplicateSite(Vec<usize>),

    #[error("site {0} was already measured in this run")]
    AlreadyMeasured(usize),

    #[error("forced outcome {outcome} at site {site} has probability {probability:.3e}")]
    ImpossibleBranch {
        site: usize,
        outcome: u8,
        probability: f64,
    },

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("pending pair correction ({0}, {1}) has both ends inside the conjugated triple")]
    PairInsideTriple(usize, usize),

    #[error("pair correction touching site {0} cannot be pushed through a basis swap")]
    PairAtSwappedSite(usize),

    #[error("state is not a pure product across the requested split (defect {0:.3e})")]
    NotProduct(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
