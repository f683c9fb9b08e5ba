use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid model parameters: {0}")]
    Params(String),

    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("sites {0} and {1} are not bonded")]
    NotABond(usize, usize),

    #[error("collective drive needs at least two right-reservoir sites, found {0}")]
    CollectiveDrive(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("Krylov breakdown at t = {time}: {reason}")]
    KrylovBreakdown { time: f64, reason: String },

    #[error("steady state is not unique (two smallest singular values {0:.3e}, {1:.3e})")]
    DegenerateNullSpace(f64, f64),

    #[error("undamped mode in the effective Hamiltonian (relative decay {0:.3e}); steady state may not be unique")]
    DarkState(f64),

    #[error("system too large for the dense solver: {n_sites} sites (max {max})")]
    TooLarge { n_sites: usize, max: usize },

    #[error("expectation value has imaginary part {0:.3e}")]
    ComplexExpectation(f64),

    #[error("column currents not homogeneous (residual {0:.3e})")]
    NotConserved(f64),

    #[error("steady state not reached: residual {residual:.3e} above {tol:.1e}")]
    Unconverged { residual: f64, tol: f64 },

    #[error("current not conserved at site {site} (divergence {value:.3e})")]
    Divergence { site: usize, value: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
