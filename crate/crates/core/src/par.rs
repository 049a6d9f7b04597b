//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it (or with [`ExecMode::Sequential`]) everything runs in order on
//! the calling thread. Results are always returned in input order so both
//! modes produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// The mode actually used: `Parallel` degrades to `Sequential` when the
    /// crate is built without rayon.
    pub fn effective(self) -> ExecMode {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecMode::Sequential
        }
    }
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => unreachable!(),
    }
}

/// Map `f` over a slice, preserving order.
pub fn map_slice<I, T, F>(mode: ExecMode, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => items.par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => unreachable!(),
    }
}

/// Lowest index in `0..n` for which `f` returns `Some`, together with its
/// value. The parallel path evaluates in chunks so the answer is the same as
/// a sequential scan, and stops after the first chunk with a hit.
pub fn first_some<T, F>(mode: ExecMode, n: usize, f: F) -> Option<(usize, T)>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => (0..n).find_map(|i| f(i).map(|t| (i, t))),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            const CHUNK: usize = 4096;
            let mut start = 0;
            while start < n {
                let end = (start + CHUNK).min(n);
                let hit = (start..end)
                    .into_par_iter()
                    .filter_map(|i| f(i).map(|t| (i, t)))
                    .min_by_key(|(i, _)| *i);
                if hit.is_some() {
                    return hit;
                }
                start = end;
            }
            None
        }
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let seq = map_range(ExecMode::Sequential, 1000, |i| i * i);
        let par = map_range(ExecMode::Parallel, 1000, |i| i * i);
        assert_eq!(seq, par);
    }

    #[test]
    fn first_some_is_lowest_index() {
        let f = |i: usize| (i % 977 == 976 || i == 9000).then_some(i);
        assert_eq!(first_some(ExecMode::Parallel, 20000, f), Some((976, 976)));
        assert_eq!(first_some(ExecMode::Sequential, 20000, f), Some((976, 976)));
        assert_eq!(first_some(ExecMode::Parallel, 10, |_| None::<()>), None);
    }
}
