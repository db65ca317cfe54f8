use alloc::string::String;

/// Errors raised by the library.
///
/// Everything except [`Error::NonFinite`] and [`Error::BudgetExhausted`] is a
/// violated precondition on the caller's input.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}: dimension must be at least 1")]
    InvalidDimension(usize),
    #[error("configuration is empty")]
    EmptyConfiguration,
    #[error("points {0} and {1} coincide; lexicographic leader is undefined")]
    DuplicatePoint(usize, usize),
    #[error("too many points for brute-force census: {len} > {limit}")]
    TooManyPoints { len: usize, limit: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
    #[error("sampling budget exhausted after {attempts} attempts with no accepted draw")]
    BudgetExhausted { attempts: u64 },
}

impl Error {
    /// True when the error reports bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NonFinite(_) | Error::BudgetExhausted { .. })
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        // bound first so NaN operands fail the check
        let ok: bool = $cond;
        if !ok {
            return Err($crate::Error::Precondition(alloc::format!($($fmt)+)));
        }
    }};
}
pub(crate) use ensure;
