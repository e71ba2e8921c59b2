use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Default cap on the number of items any single enumeration may visit.
pub const DEFAULT_MAX_ITEMS: u64 = 1 << 28;

/// Guardrail for exhaustive computations: an item cap and an optional wall-clock deadline.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub max_items: u64,
    deadline: Option<Instant>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_items: DEFAULT_MAX_ITEMS, deadline: None }
    }
}

impl Budget {
    pub fn new(max_items: u64, seconds: Option<u64>) -> Self {
        Budget {
            max_items,
            deadline: seconds.map(|s| Instant::now() + Duration::from_secs(s)),
        }
    }

    pub fn items(max_items: u64) -> Self {
        Budget { max_items, deadline: None }
    }

    /// Fails if `count` items would exceed the cap. `count` is `None` when it overflowed `u64`.
    pub fn check_items(&self, what: &str, count: Option<u64>) -> Result<u64> {
        match count {
            Some(c) if c <= self.max_items => Ok(c),
            Some(c) => Err(Error::BudgetExceeded(format!(
                "{what}: {c} items > cap {}",
                self.max_items
            ))),
            None => Err(Error::BudgetExceeded(format!("{what}: item count overflows u64"))),
        }
    }

    pub fn check_time(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() > d => {
                Err(Error::BudgetExceeded("wall-clock deadline passed".into()))
            }
            _ => Ok(()),
        }
    }
}

/// `base^exp` if it fits in a `u64`.
pub fn checked_pow(base: u64, exp: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}
