//! Replica fan-out. With the `parallel` feature, work is spread over a rayon
//! pool; without it, everything runs on the calling thread. Results always
//! come back in index order, so reductions are deterministic.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    /// Worker count; 0 means the available parallelism.
    #[cfg(feature = "parallel")]
    Parallel(usize),
}

impl Default for Executor {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Executor::Parallel(0)
        }
        #[cfg(not(feature = "parallel"))]
        {
            Executor::Sequential
        }
    }
}

impl Executor {
    /// Executor with `workers` threads; `workers == 1` runs sequentially.
    /// Without the `parallel` feature the count is ignored.
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            return Executor::Sequential;
        }
        #[cfg(feature = "parallel")]
        {
            Executor::Parallel(workers)
        }
        #[cfg(not(feature = "parallel"))]
        {
            Executor::Sequential
        }
    }

    /// Evaluates `f(0), ..., f(n-1)` and returns the results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            Executor::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel(workers) => {
                use rayon::prelude::*;
                let run = || (0..n).into_par_iter().map(&f).collect();
                if workers == 0 {
                    run()
                } else {
                    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                        Ok(pool) => pool.install(run),
                        Err(_) => (0..n).map(&f).collect(),
                    }
                }
            }
        }
    }

    /// Splits `0..n` into fixed-size chunks, maps each chunk, and returns the
    /// chunk results in order. Chunk boundaries do not depend on worker count.
    pub fn map_chunks<T, F>(&self, n: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        let count = n.div_ceil(chunk);
        self.map(count, |i| f(i * chunk..((i + 1) * chunk).min(n)))
    }
}
