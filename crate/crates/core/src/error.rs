use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(&'static str),
    #[error("image side {got} is below the minimum of {min}")]
    TooSmall { got: usize, min: usize },
    #[error("invalid point spread function: {0}")]
    InvalidPsf(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },
    #[error("target SNR {target_db} dB unreachable with 1 to 1e8 photons per unit intensity")]
    SnrUnreachable { target_db: f64 },
    #[error("argument outside the function domain: {0}")]
    DomainError(&'static str),
    #[error("no eigenvalue below the energy cutoff {cutoff}; raise the cutoff")]
    EmptyBasis { cutoff: f64 },
    #[error("eigensolver failed: {0}")]
    EigensolverFailure(&'static str),
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionError { expected, got })
    }
}
