//! Fault occurrence schedules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fault start times on a millisecond grid, so a fault always begins on a
/// control tick and lasts a whole number of ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSchedule {
    pub seed: u64,
    pub interval_ms: (u64, u64),
    pub block_ms: u64,
    pub occurrences_ms: Vec<u64>,
}

impl FaultSchedule {
    /// Gaps (including the first, measured from t = 0) drawn uniformly
    /// from the interval, in steps of `grid_ms`. Only faults that end
    /// within `duration_ms` are kept.
    pub fn generate(
        seed: u64,
        interval_ms: (u64, u64),
        block_ms: u64,
        grid_ms: u64,
        duration_ms: u64,
    ) -> FaultSchedule {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (interval_ms.0.div_ceil(grid_ms), interval_ms.1 / grid_ms);
        let mut occurrences_ms = Vec::new();
        let mut t = 0;
        loop {
            t += rng.random_range(lo..=hi) * grid_ms;
            if t + block_ms > duration_ms {
                break;
            }
            occurrences_ms.push(t);
        }
        FaultSchedule { seed, interval_ms, block_ms, occurrences_ms }
    }

    pub fn none(block_ms: u64) -> FaultSchedule {
        FaultSchedule { seed: 0, interval_ms: (0, 0), block_ms, occurrences_ms: Vec::new() }
    }

    pub fn times_s(&self) -> Vec<f64> {
        self.occurrences_ms.iter().map(|&ms| ms as f64 / 1000.0).collect()
    }

    /// The fault that starts exactly at `t_ms`, if any.
    pub fn starts_at(&self, t_ms: u64) -> bool {
        self.occurrences_ms.binary_search(&t_ms).is_ok()
    }

    pub fn active(&self, t_ms: u64) -> bool {
        let i = self.occurrences_ms.partition_point(|&s| s <= t_ms);
        i > 0 && t_ms < self.occurrences_ms[i - 1] + self.block_ms
    }
}
