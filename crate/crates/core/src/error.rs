use crate::group::GroupDescriptor;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("group mismatch: expected {expected}, found {found}")]
    GroupMismatch {
        expected: GroupDescriptor,
        found: GroupDescriptor,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("point {0} does not belong to the space")]
    NotInSpace(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A computation would exceed its configured resource budget.
    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    Budget {
        what: String,
        needed: u128,
        limit: u128,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The query lies outside the domain of the relation's definition.
    #[error("outside definition domain: {0}")]
    Domain(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}
