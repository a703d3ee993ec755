//! Wall-clock timing of elementwise activation evaluation over a fixed
//! random input batch.

use std::fmt;
use std::hint::black_box;
use std::io;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{stl_grad_unchecked, stl_unchecked};
use crate::error::{Error, Result};
use crate::fast_log::{fast_stl_slice, Log2Mode, DEFAULT_LUT_SIZE};
use crate::report;

pub const BENCH_N: usize = 20_000;
pub const WIDE_RANGE: (f64, f64) = (-10_000.0, 10_000.0);
/// Narrow range where roughly half the inputs take the linear branch.
pub const BRANCH_MIX_RANGE: (f64, f64) = (-2.0, 2.0);
pub const WARMUP_REPEATS: usize = 3;
pub const MIN_REPEATS: usize = 5;
pub const DEFAULT_REPEATS: usize = 10;

/// `n` uniform draws from `[lo, hi)`, reproducible per seed.
pub fn sample_inputs(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidConfig(format!(
            "sample range needs finite lo < hi, got [{lo}, {hi})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| rng.random_range(lo..hi)).collect())
}

/// Sum of the inputs, used to show that every row saw the same batch.
pub fn checksum(xs: &[f64]) -> f64 {
    xs.iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub label: String,
    pub n: usize,
    pub repeats: usize,
    /// Seconds per timed repeat, in run order.
    pub times: Vec<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Sum of the kernel outputs from the last repeat.
    pub output_checksum: f64,
    pub input_checksum: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Times `kernel` over the whole batch `repeats` times after
/// [`WARMUP_REPEATS`] untimed runs. The outputs are summed after each run
/// and passed through `black_box` so the work cannot be elided.
pub fn time_activation<T, O>(
    label: impl Into<String>,
    inputs: &[T],
    repeats: usize,
    mut kernel: impl FnMut(&[T], &mut [O]),
) -> Result<BenchResult>
where
    T: Copy + Into<f64>,
    O: Copy + Default + Into<f64>,
{
    if repeats < MIN_REPEATS {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_REPEATS} repeats, got {repeats}"
        )));
    }
    if inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = vec![O::default(); inputs.len()];
    let sum = |out: &[O]| out.iter().map(|&o| o.into()).sum::<f64>();
    for _ in 0..WARMUP_REPEATS {
        kernel(black_box(inputs), &mut out);
        black_box(sum(&out));
    }
    let mut times = Vec::with_capacity(repeats);
    let mut output_checksum = 0.0;
    for _ in 0..repeats {
        let start = Instant::now();
        kernel(black_box(inputs), black_box(&mut out));
        let elapsed = start.elapsed().as_secs_f64();
        output_checksum = black_box(sum(&out));
        // timer resolution floor; keeps every recorded time positive
        times.push(elapsed.max(1e-9));
    }
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BenchResult {
        label: label.into(),
        n: inputs.len(),
        repeats,
        median: median(&sorted),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        times,
        output_checksum,
        input_checksum: inputs.iter().map(|&x| x.into()).sum(),
    })
}

/// Functions compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Relu,
    Softsign,
    StlExact,
    StlFastPoly,
    StlFastLut,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Relu,
        Variant::Softsign,
        Variant::StlExact,
        Variant::StlFastPoly,
        Variant::StlFastLut,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Relu => "relu",
            Variant::Softsign => "softsign",
            Variant::StlExact => "stl-exact",
            Variant::StlFastPoly => "stl-fast-poly",
            Variant::StlFastLut => "stl-fast-lut",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Batch kernels. Value kernels for the fast variants run in single
/// precision on a pre-converted copy of the batch.
pub mod kernels {
    use super::*;
    use crate::simd::map_slice;

    pub fn relu(xs: &[f64], out: &mut [f64]) {
        map_slice(xs, out, |x| x.max(0.0));
    }

    pub fn relu_grad(xs: &[f64], out: &mut [f64]) {
        map_slice(xs, out, |x| if x >= 0.0 { 1.0 } else { 0.0 });
    }

    pub fn softsign(xs: &[f64], out: &mut [f64]) {
        map_slice(xs, out, |x| x / (x.abs() + 1.0));
    }

    pub fn softsign_grad(xs: &[f64], out: &mut [f64]) {
        map_slice(xs, out, |x| {
            let d = x.abs() + 1.0;
            1.0 / (d * d)
        });
    }

    pub fn stl_exact(xs: &[f64], out: &mut [f64]) {
        map_slice(xs, out, |x| stl_unchecked(x, 1.0));
    }

    pub fn stl_exact_grad(xs: &[f64], out: &mut [f64]) {
        map_slice(xs, out, |x| stl_grad_unchecked(x, 1.0));
    }

    pub fn stl_f32_grad(xs: &[f32], out: &mut [f32]) {
        map_slice(xs, out, |x| {
            let ax = x.abs();
            if ax <= 1.0 {
                1.0
            } else {
                1.0 / ax
            }
        });
    }

    pub fn stl_fast(mode: &Log2Mode) -> impl FnMut(&[f32], &mut [f32]) + '_ {
        move |xs, out| fast_stl_slice(xs, out, 1.0, mode)
    }
}

/// Whether a row times the activation or its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Value,
    Gradient,
}

/// Times one variant on `inputs`.
pub fn time_variant(
    variant: Variant,
    quantity: Quantity,
    inputs: &[f64],
    inputs_f32: &[f32],
    repeats: usize,
    lut: &Log2Mode,
) -> Result<BenchResult> {
    use kernels::*;
    let label = match quantity {
        Quantity::Value => variant.label().to_string(),
        Quantity::Gradient => format!("{}-grad", variant.label()),
    };
    let poly = Log2Mode::Polynomial;
    match (variant, quantity) {
        (Variant::Relu, Quantity::Value) => time_activation(label, inputs, repeats, relu),
        (Variant::Relu, Quantity::Gradient) => time_activation(label, inputs, repeats, relu_grad),
        (Variant::Softsign, Quantity::Value) => time_activation(label, inputs, repeats, softsign),
        (Variant::Softsign, Quantity::Gradient) => {
            time_activation(label, inputs, repeats, softsign_grad)
        }
        (Variant::StlExact, Quantity::Value) => time_activation(label, inputs, repeats, stl_exact),
        (Variant::StlExact, Quantity::Gradient) => {
            time_activation(label, inputs, repeats, stl_exact_grad)
        }
        (Variant::StlFastPoly, Quantity::Value) => {
            time_activation(label, inputs_f32, repeats, stl_fast(&poly))
        }
        (Variant::StlFastLut, Quantity::Value) => {
            time_activation(label, inputs_f32, repeats, stl_fast(lut))
        }
        // the gradient never touches the logarithm, so both fast variants
        // share the single-precision kernel
        (Variant::StlFastPoly | Variant::StlFastLut, Quantity::Gradient) => {
            time_activation("stl-f32-grad", inputs_f32, repeats, stl_f32_grad)
        }
    }
}

/// Value rows for every variant, then gradient rows for relu, softsign,
/// exact STL and the single-precision STL gradient. All rows share one
/// input batch.
pub fn compare_runtimes(
    n: usize,
    range: (f64, f64),
    seed: u64,
    repeats: usize,
) -> Result<Vec<BenchResult>> {
    let inputs = sample_inputs(n, range.0, range.1, seed)?;
    let inputs_f32: Vec<f32> = inputs.iter().map(|&x| x as f32).collect();
    let lut = Log2Mode::lut(DEFAULT_LUT_SIZE)?;
    let mut rows = Vec::new();
    for v in Variant::ALL {
        rows.push(time_variant(
            v,
            Quantity::Value,
            &inputs,
            &inputs_f32,
            repeats,
            &lut,
        )?);
    }
    for v in [
        Variant::Relu,
        Variant::Softsign,
        Variant::StlExact,
        Variant::StlFastPoly,
    ] {
        rows.push(time_variant(
            v,
            Quantity::Gradient,
            &inputs,
            &inputs_f32,
            repeats,
            &lut,
        )?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub n: usize,
    pub repeats: usize,
    pub median_s: f64,
    pub min_s: f64,
    pub checksum: f64,
}

impl From<&BenchResult> for BenchRow {
    fn from(r: &BenchResult) -> Self {
        BenchRow {
            label: r.label.clone(),
            n: r.n,
            repeats: r.repeats,
            median_s: r.median,
            min_s: r.min,
            checksum: r.output_checksum,
        }
    }
}

/// Writes rows with `# key=value` metadata lines (range, seed, threading).
pub fn write_bench_csv<W: io::Write>(
    rows: &[BenchRow],
    meta: &[(&str, String)],
    sink: W,
) -> Result<()> {
    report::write_rows_with_meta(rows, meta, sink)
}

pub fn read_bench_csv<R: io::Read>(source: R) -> Result<Vec<BenchRow>> {
    report::read_rows(source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_examples() {
        let xs = sample_inputs(BENCH_N, WIDE_RANGE.0, WIDE_RANGE.1, 7).unwrap();
        assert_eq!(xs.len(), 20_000);
        assert!(xs.iter().all(|x| (-10_000.0..10_000.0).contains(x)));
        let one = sample_inputs(1, 0.0, 1.0, 3).unwrap();
        assert!(one.len() == 1 && (0.0..1.0).contains(&one[0]));
        assert_eq!(
            sample_inputs(100, -1.0, 1.0, 9).unwrap(),
            sample_inputs(100, -1.0, 1.0, 9).unwrap()
        );
        assert!(sample_inputs(10, 1.0, 1.0, 0).is_err());
        assert!(sample_inputs(0, 0.0, 1.0, 0).is_err());
        assert!(sample_inputs(10, f64::NAN, 1.0, 0).is_err());
    }

    #[test]
    fn time_activation_shape() {
        let xs = sample_inputs(BENCH_N, WIDE_RANGE.0, WIDE_RANGE.1, 7).unwrap();
        let r = time_activation("relu", &xs, 10, kernels::relu).unwrap();
        assert_eq!((r.times.len(), r.n, r.repeats), (10, 20_000, 10));
        assert!(r.times.iter().all(|&t| t > 0.0));
        assert!(r.min <= r.median && r.median <= r.max);
        let want: f64 = xs.iter().map(|x| x.max(0.0)).sum();
        assert_eq!(r.output_checksum, want);
        assert!(time_activation("relu", &xs, 4, kernels::relu).is_err());
        assert!(time_activation("relu", &[] as &[f64], 10, kernels::relu).is_err());
    }

    #[test]
    fn compare_shape_and_input_identity() {
        let rows = compare_runtimes(2_000, WIDE_RANGE, 7, 5).unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "relu",
                "softsign",
                "stl-exact",
                "stl-fast-poly",
                "stl-fast-lut",
                "relu-grad",
                "softsign-grad",
                "stl-exact-grad",
                "stl-f32-grad"
            ]
        );
        let f64_sum = rows[0].input_checksum;
        for r in rows.iter().filter(|r| {
            r.label.starts_with("relu")
                || r.label.starts_with("softsign")
                || r.label.starts_with("stl-exact")
        }) {
            assert_eq!(r.input_checksum, f64_sum);
        }
        let f32_sum = rows[3].input_checksum;
        for r in &rows[3..5] {
            assert_eq!(r.input_checksum, f32_sum);
        }
        // the f32 copy differs only by rounding
        assert!((f32_sum - f64_sum).abs() <= 2_000.0 * 1e-3);
    }

    #[test]
    fn fast_checksum_close_to_exact() {
        let n = 20_000;
        let rows = compare_runtimes(n, WIDE_RANGE, 11, 5).unwrap();
        let exact = rows[2].output_checksum;
        for fast in &rows[3..5] {
            assert!((fast.output_checksum - exact).abs() <= 0.0042 * n as f64);
        }
    }
}
