use alloc::string::String;

/// Errors raised by the core library.
///
/// Every variant describes bad input or an exhausted resource guard; a failed
/// statistical check is never an error, it is recorded in a report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("resource guard exceeded: more than {limit} {what}")]
    ResourceLimit { what: &'static str, limit: usize },
    #[error("empty sample: {0}")]
    EmptySample(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::Validation(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
