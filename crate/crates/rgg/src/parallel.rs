use rayon::prelude::*;
use rgg_core::exec::Executor;

/// Runs work units on the rayon pool; results come back in index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Executor for Parallel {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).into_par_iter().map(f).collect()
    }
}

/// Thread count from `RGG_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("RGG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("RGG_THREADS must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(None),
    }
}

/// Sizes the global rayon pool from `RGG_THREADS` (all cores by default).
pub fn init_pool() -> Result<(), String> {
    if let Some(n) = threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rgg_core::exec::Sequential;

    #[test]
    fn parallel_matches_sequential() {
        let f = |i: usize| (i as f64).sqrt() * 3.0;
        assert_eq!(Parallel.map(1000, f), Sequential.map(1000, f));
    }
}
