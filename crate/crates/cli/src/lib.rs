//! Command-line layer over `sradcat-core`: configuration, subcommands,
//! deterministic CSV/JSON export and the acceptance suite.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "SRADCAT_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`] if set. Output never
/// depends on the thread count.
pub fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("{THREADS_ENV} = {v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
