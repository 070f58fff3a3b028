//! Worker-count control through the `JPRLC_THREADS` environment variable.

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "JPRLC_THREADS";

/// Requested worker count; 0 means one per core.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) if !raw.trim().is_empty() => raw
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("{THREADS_ENV} must be a non-negative integer, got `{raw}`"))),
        _ => Ok(0),
    }
}

/// Sizes rayon's global pool from the environment. Returns the worker count
/// in effect. Only the first call in a process has any effect.
pub fn configure_global_pool() -> Result<usize> {
    let threads = threads_from_env()?;
    // a pool that is already running is left alone
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(rayon::current_num_threads())
}
