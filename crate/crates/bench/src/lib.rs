//! Shared input batches for the criterion benches.

use stl_core::bench::{sample_inputs, BENCH_N, WIDE_RANGE};

/// The 20,000-sample batch on `[-1e4, 1e4)` in both precisions.
pub fn wide_batch(seed: u64) -> (Vec<f64>, Vec<f32>) {
    let xs = sample_inputs(BENCH_N, WIDE_RANGE.0, WIDE_RANGE.1, seed)
        .expect("default batch parameters are valid");
    let xs32 = xs.iter().map(|&x| x as f32).collect();
    (xs, xs32)
}
