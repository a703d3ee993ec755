//! Single-precision fast `log2` built from the IEEE-754 binary32 layout, and
//! the fast STL path on top of it.
//!
//! A normal binary32 `x` is `(-1)^s * 2^(E-127) * (1+V)`, so for `x > 0`
//! `log2(x) = (E - 127) + log2(1 + V)`. The exponent is read straight from
//! the bits; `log2(1+V)` on `[1, 2)` comes either from a quadratic or from a
//! lookup table with linear interpolation.

use std::f64::consts::LN_2;
use std::num::FpCategory;

use serde::{Deserialize, Serialize};

use crate::activation::Sign;
use crate::error::{Error, Result};
use crate::simd::map_slice;

const EXPONENT_BIAS: i32 = 127;
const MANTISSA_BITS: u32 = 23;
const MANTISSA_MASK: u32 = (1 << MANTISSA_BITS) - 1;
const ONE_BITS: u32 = 0x3f80_0000;

/// Coefficients of `(c2*m + c1)*m + c0`, highest degree first.
pub const LOG2_POLY_COEFFS: [f32; 3] = [-0.344_845, 2.024_658, -1.674_873];

/// Measured sup of `|log2_poly(m) - log2(m)|` on `[1, 2)` is 0.004941; this
/// is the bound the fast path is held to.
pub const LOG2_POLY_MAX_ERR: f64 = 0.006;

/// Largest deviation of [`fast_stl`] (alpha = 1) from the exact STL on the
/// log branch: `ln(2) * LOG2_POLY_MAX_ERR`, rounded up.
pub const FAST_STL_MAX_ERR: f64 = 0.0042;

pub const DEFAULT_LUT_SIZE: usize = 256;

fn reject_class(x: f32) -> Result<()> {
    let class = match x.classify() {
        FpCategory::Normal => return Ok(()),
        FpCategory::Zero => "zero",
        FpCategory::Subnormal => "subnormal",
        FpCategory::Infinite => "infinite",
        FpCategory::Nan => "NaN",
    };
    Err(Error::NotNormal { value: x, class })
}

/// Sign bit, biased exponent and 23-bit fraction of a normal binary32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Binary32Parts {
    pub sign: u8,
    pub exponent: u8,
    /// Raw fraction bits; the fraction itself is `mantissa / 2^23`.
    pub mantissa: u32,
}

impl Binary32Parts {
    /// The fraction `V` in `[0, 1)`.
    pub fn fraction(&self) -> f64 {
        f64::from(self.mantissa) / f64::from(1u32 << MANTISSA_BITS)
    }

    pub fn unbiased_exponent(&self) -> i32 {
        i32::from(self.exponent) - EXPONENT_BIAS
    }

    /// Reassembles `(-1)^s * 2^(E-127) * (1+V)` arithmetically. Every
    /// intermediate is exact in f64, so the result round-trips bit for bit.
    pub fn reassemble(&self) -> f32 {
        let sign = if self.sign == 1 { -1.0 } else { 1.0 };
        let magnitude = (1.0 + self.fraction()) * 2f64.powi(self.unbiased_exponent());
        (sign * magnitude) as f32
    }
}

/// Splits a normal binary32 into sign, biased exponent and fraction.
/// Zero, subnormals, infinities and NaN are rejected.
pub fn decompose_binary32(x: f32) -> Result<Binary32Parts> {
    reject_class(x)?;
    let bits = x.to_bits();
    Ok(Binary32Parts {
        sign: (bits >> 31) as u8,
        exponent: ((bits >> MANTISSA_BITS) & 0xff) as u8,
        mantissa: bits & MANTISSA_MASK,
    })
}

#[inline]
fn poly_unchecked(m: f32) -> f32 {
    let [c2, c1, c0] = LOG2_POLY_COEFFS;
    (c2 * m + c1) * m + c0
}

/// Quadratic approximation of `log2(m)` for `m` in `[1, 2)`, Horner form.
pub fn log2_poly(m: f32) -> Result<f32> {
    if !(1.0..2.0).contains(&m) {
        return Err(Error::OutOfDomain {
            what: "mantissa",
            value: f64::from(m),
            range: "[1, 2)",
        });
    }
    Ok(poly_unchecked(m))
}

/// Table of `log2(1 + i/size)` for `i` in `0..size`.
#[derive(Debug, Clone, PartialEq)]
pub struct Log2Lut {
    // size + 1 entries; the last one is log2(2) = 1 so interpolation never
    // reads past the end.
    table: Vec<f64>,
    index_shift: u32,
}

impl Log2Lut {
    pub fn entries(&self) -> &[f64] {
        &self.table[..self.size()]
    }

    pub fn size(&self) -> usize {
        self.table.len() - 1
    }

    /// Worst-case linear interpolation error of `log2(1+v)` with step
    /// `1/size`: `max|f''| h^2 / 8 = 1 / (8 ln2 size^2)`.
    pub fn interpolation_bound(&self) -> f64 {
        let h = 1.0 / self.size() as f64;
        h * h / (8.0 * LN_2)
    }

    #[inline]
    fn lookup(&self, mantissa: u32) -> f32 {
        let i = (mantissa >> self.index_shift) as usize;
        let rest = mantissa & ((1 << self.index_shift) - 1);
        let t = rest as f64 / f64::from(1u32 << self.index_shift);
        let lo = self.table[i];
        let hi = self.table[i + 1];
        (lo + t * (hi - lo)) as f32
    }
}

pub fn build_lut(size: usize) -> Result<Log2Lut> {
    if size < 2 || !size.is_power_of_two() || size > (1 << MANTISSA_BITS) {
        return Err(Error::InvalidLutSize(size));
    }
    let table = (0..=size)
        .map(|i| (1.0 + i as f64 / size as f64).log2())
        .collect();
    Ok(Log2Lut {
        table,
        index_shift: MANTISSA_BITS - size.trailing_zeros(),
    })
}

/// How `log2(1+V)` is approximated.
#[derive(Debug, Clone, PartialEq)]
pub enum Log2Mode {
    Polynomial,
    Lut(Log2Lut),
}

impl Log2Mode {
    pub fn lut(size: usize) -> Result<Self> {
        Ok(Log2Mode::Lut(build_lut(size)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Log2Mode::Polynomial => "polynomial",
            Log2Mode::Lut(_) => "lut",
        }
    }

    /// Approximate `log2(m)` for `m = 1 + mantissa / 2^23`.
    #[inline]
    fn mantissa_log2(&self, mantissa: u32) -> f32 {
        match self {
            Log2Mode::Polynomial => poly_unchecked(f32::from_bits(mantissa | ONE_BITS)),
            Log2Mode::Lut(lut) => lut.lookup(mantissa),
        }
    }

    /// Upper bound on the absolute error of [`fast_log2`] in this mode,
    /// including single-precision rounding of the result.
    pub fn error_bound(&self) -> f64 {
        match self {
            Log2Mode::Polynomial => LOG2_POLY_MAX_ERR,
            Log2Mode::Lut(lut) => lut.interpolation_bound() + 2e-6,
        }
    }

    /// Caller guarantees `x` is a positive normal.
    #[inline]
    pub(crate) fn log2_unchecked(&self, x: f32) -> f32 {
        let bits = x.to_bits();
        let exponent = ((bits >> MANTISSA_BITS) & 0xff) as i32 - EXPONENT_BIAS;
        exponent as f32 + self.mantissa_log2(bits & MANTISSA_MASK)
    }
}

/// `(E - 127) + approx_log2(1 + V)` for normal `x > 1`.
pub fn fast_log2(x: f32, mode: &Log2Mode) -> Result<f32> {
    reject_class(x)?;
    if x <= 1.0 {
        return Err(Error::OutOfDomain {
            what: "fast_log2 input",
            value: f64::from(x),
            range: "(1, inf)",
        });
    }
    Ok(mode.log2_unchecked(x))
}

/// `beta = alpha * sign(x) / log2(e) = alpha * sign(x) * ln 2`, the factor
/// turning a base-2 log into the STL log branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaConstant {
    pub value: f64,
}

impl BetaConstant {
    pub fn new(alpha: f64, sign: Sign) -> Self {
        BetaConstant {
            value: alpha * sign.as_f64() / std::f64::consts::LOG2_E,
        }
    }
}

#[inline]
fn select_branch(x: f32, alpha: f32, log2_abs: f32) -> f32 {
    let sign = 1.0f32.copysign(x);
    let log_branch = alpha * sign * std::f32::consts::LN_2 * log2_abs + alpha * sign;
    if x.abs() <= 1.0 {
        alpha * x
    } else {
        log_branch
    }
}

#[inline]
fn poly_log2_bits(ax: f32) -> f32 {
    let bits = ax.to_bits();
    let exponent = ((bits >> MANTISSA_BITS) as i32).wrapping_sub(EXPONENT_BIAS);
    exponent as f32 + poly_unchecked(f32::from_bits((bits & MANTISSA_MASK) | ONE_BITS))
}

#[inline]
pub(crate) fn fast_stl_unchecked(x: f32, alpha: f32, mode: &Log2Mode) -> f32 {
    let ax = x.abs();
    if ax <= 1.0 {
        alpha * x
    } else {
        select_branch(x, alpha, mode.log2_unchecked(ax))
    }
}

/// Fast STL: exact `alpha * x` on `|x| <= 1`, otherwise
/// `beta * fast_log2(|x|) + alpha * sign(x)`.
pub fn fast_stl(x: f32, alpha: f32, mode: &Log2Mode) -> Result<f32> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::NonPositiveParam {
            what: "STL alpha",
            value: f64::from(alpha),
        });
    }
    if x.is_nan() {
        return Err(Error::NotNormal {
            value: x,
            class: "NaN",
        });
    }
    if x.abs() > 1.0 {
        reject_class(x)?;
    }
    Ok(fast_stl_unchecked(x, alpha, mode))
}

/// Applies [`fast_stl`] to a slice. Inputs must be finite; this is the
/// benchmark kernel and does not re-validate each element.
///
/// The polynomial loop evaluates both branches and selects, which lets the
/// compiler vectorize it. On the linear branch the log of a value `<= 1` is
/// computed and discarded.
pub fn fast_stl_slice(xs: &[f32], out: &mut [f32], alpha: f32, mode: &Log2Mode) {
    match mode {
        Log2Mode::Polynomial => map_slice(xs, out, |x| {
            select_branch(x, alpha, poly_log2_bits(x.abs()))
        }),
        Log2Mode::Lut(_) => map_slice(xs, out, |x| fast_stl_unchecked(x, alpha, mode)),
    }
}

/// One row of an approximation audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub m: f64,
    pub approx: f64,
    pub exact: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    pub rows: Vec<AuditRow>,
    pub max_abs_err: f64,
    pub argmax: f64,
}

/// Compares the mode's `log2` approximation with the library `log2` on
/// `points` uniformly spaced mantissas `1 + i/points`.
pub fn audit_log2(mode: &Log2Mode, points: usize) -> Result<Audit> {
    if points == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rows = Vec::with_capacity(points);
    let (mut max_abs_err, mut argmax) = (0.0, 1.0);
    for i in 0..points {
        let m = (1.0 + i as f64 / points as f64) as f32;
        let approx = f64::from(mode.log2_unchecked(m));
        let exact = f64::from(m).log2();
        let abs_err = (approx - exact).abs();
        if abs_err > max_abs_err {
            max_abs_err = abs_err;
            argmax = f64::from(m);
        }
        rows.push(AuditRow {
            m: f64::from(m),
            approx,
            exact,
            abs_err,
        });
    }
    Ok(Audit {
        rows,
        max_abs_err,
        argmax,
    })
}
