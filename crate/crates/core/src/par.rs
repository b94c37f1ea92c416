//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature, work runs on rayon; `Parallelism::SERIAL`
//! (or building without the feature) uses a plain iterator. Results are
//! always returned in index order, so folds over them do not depend on the
//! thread count.

use serde::{Deserialize, Serialize};

/// Worker count: `0` means all available cores, `1` forces serial execution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Parallelism(pub usize);

impl Parallelism {
    pub const SERIAL: Parallelism = Parallelism(1);
    pub const AUTO: Parallelism = Parallelism(0);

    pub fn is_serial(self) -> bool {
        self.0 == 1 || !cfg!(feature = "parallel")
    }
}

/// `(0..len).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(len: u64, parallelism: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !parallelism.is_serial() {
        use rayon::prelude::*;
        let run = || (0..len).into_par_iter().map(&f).collect::<Vec<T>>();
        return match parallelism.0 {
            0 => run(),
            threads => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(run),
                Err(_) => run(),
            },
        };
    }
    let _ = parallelism;
    (0..len).map(f).collect()
}
