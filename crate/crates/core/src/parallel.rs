//! Ordered fan-out over independent items.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "PROCSTRUCT_THREADS";

/// Worker count from `PROCSTRUCT_THREADS`, or rayon's default when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
        },
    }
}

/// `items.map(f)` on a capped pool; results keep input order.
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}
