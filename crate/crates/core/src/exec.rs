//! Execution strategy for the data-parallel loops.
//!
//! Every parallel map collects its results in index order and every reduction
//! is a fixed-shape pairwise sum, so the floating-point result is identical
//! for any number of worker threads (and for the sequential fallback).

/// How index-parallel work is scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// Plain loop on the calling thread.
    Sequential,
    /// Rayon work stealing. Falls back to [`Execution::Sequential`] when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// True when this strategy will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fallible variant of [`Execution::map`]; the first error in index order wins.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

/// Runs `f` inside a dedicated rayon pool with `threads` workers. Without the
/// `parallel` feature this just calls `f`.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .expect("thread pool construction");
        pool.install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Pairwise (cascade) sum of equally sized buffers, element-wise. The
/// summation tree depends only on `parts.len()`.
pub fn pairwise_sum(parts: &[Vec<f64>]) -> Vec<f64> {
    match parts.len() {
        0 => Vec::new(),
        1 => parts[0].clone(),
        n => {
            let (lo, hi) = parts.split_at(n / 2);
            let mut left = pairwise_sum(lo);
            let right = pairwise_sum(hi);
            for (l, r) in left.iter_mut().zip(&right) {
                *l += r;
            }
            left
        }
    }
}

/// Pairwise sum of scalars with the same fixed tree shape as [`pairwise_sum`].
pub fn pairwise_sum_scalar(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum_scalar(lo) + pairwise_sum_scalar(hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let v = exec.map(100, |i| i * i);
            assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> =
            Execution::Parallel.try_map(50, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }

    #[test]
    fn pairwise_sum_is_elementwise() {
        let parts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0]).collect();
        assert_eq!(pairwise_sum(&parts), vec![10.0, 5.0]);
        assert_eq!(pairwise_sum_scalar(&[1.0, 2.0, 3.0]), 6.0);
        assert!(pairwise_sum(&[]).is_empty());
    }

    #[test]
    fn thread_count_does_not_change_sums() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 1e-3).collect();
        let one = with_threads(1, || Execution::Parallel.map(values.len(), |i| values[i]));
        let four = with_threads(4, || Execution::Parallel.map(values.len(), |i| values[i]));
        assert_eq!(
            pairwise_sum_scalar(&one).to_bits(),
            pairwise_sum_scalar(&four).to_bits()
        );
    }
}
