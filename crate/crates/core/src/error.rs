use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    Name(String),

    #[error("invalid factor structure: {0}")]
    Structure(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("power iteration did not converge (last residual {residual:e})")]
    Convergence { residual: f64 },

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("codebook construction failed: {0}")]
    Construction(String),

    #[error("auxiliary repair failed: {0}")]
    Repair(String),
}

impl Error {
    /// True for errors caused by bad user input rather than internal failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Name(_)
                | Error::Shape(_)
                | Error::Argument(_)
                | Error::Parse(_)
                | Error::Validation(_)
                | Error::Size(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
