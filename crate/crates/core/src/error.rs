use alloc::string::String;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input (arity, range, precondition).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An enumeration or LP would exceed the configured size budget.
    #[error("budget exceeded: {what} needs {required} steps, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u64,
    },
    /// A postcondition the construction guarantees did not hold.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

/// Default cap on enumerated assignments / operations / LP entries.
pub const DEFAULT_BUDGET: u64 = 1 << 26;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;

/// `base^exp`, saturating at `u128::MAX`.
pub(crate) fn pow_saturating(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

pub(crate) fn check_budget(what: &'static str, required: u128, budget: u64) -> Result<()> {
    if required > budget as u128 {
        Err(Error::BudgetExceeded {
            what,
            required,
            budget,
        })
    } else {
        Ok(())
    }
}
