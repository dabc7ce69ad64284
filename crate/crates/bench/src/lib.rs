//! Fixed inputs shared by the benchmarks.

use lonely_core::experiments::sample_speed_set;
use lonely_core::SpeedSet;

/// Deterministic random speed sets of size `k` drawn from `{1, ..., n}`.
pub fn random_sets(n: u64, k: u64, count: u64) -> Vec<SpeedSet> {
    (0..count)
        .map(|i| sample_speed_set(n, k, 0xbe_4c_00 + i).expect("k <= n"))
        .collect()
}
