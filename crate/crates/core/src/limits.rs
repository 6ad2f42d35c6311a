//! Enumeration caps shared by the path- and law-enumerating routines.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default cap on enumerated paths: 3^14, which admits 22 binary or 14
/// ternary steps.
pub const DEFAULT_MAX_PATHS: u128 = 4_782_969;

/// Default cap on the outcome count of product experiments (2^24).
pub const DEFAULT_MAX_PRODUCT: u128 = 1 << 24;

/// Cap on grouped atoms in recombined laws.
pub const DEFAULT_MAX_ATOMS: u128 = 50_000_000;

/// Name of the environment variable that overrides [`DEFAULT_MAX_PATHS`].
pub const MAX_PATHS_ENV: &str = "LECAM_MAX_PATHS";

/// Path enumeration cap, read once from `LECAM_MAX_PATHS` if set.
pub fn max_paths() -> u128 {
    static CAP: OnceLock<u128> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MAX_PATHS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_PATHS)
    })
}

pub(crate) fn check(size: u128, cap: u128) -> Result<()> {
    if size > cap {
        Err(Error::SizeLimit { size, cap })
    } else {
        Ok(())
    }
}

/// Product of counts, saturating instead of overflowing.
pub(crate) fn product_size<I: IntoIterator<Item = usize>>(counts: I) -> u128 {
    counts
        .into_iter()
        .fold(1u128, |acc, k| acc.saturating_mul(k as u128))
}
