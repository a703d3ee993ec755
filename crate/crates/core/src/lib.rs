//! Signed and truncated logarithm (STL) activation.
//!
//! `stl(x) = alpha * x` for `|x| <= 1` and `alpha * sign(x) * (ln|x| + 1)`
//! otherwise. The crate provides:
//!
//! - [`activation`]: exact f64 STL and ten reference activations with
//!   derivatives, plus softmax;
//! - [`fast_log`]: a binary32 bit-level `log2` (quadratic or lookup table)
//!   and the fast STL path built on it;
//! - [`props`]: grid checks of oddness, monotonicity, differentiability,
//!   gradient continuity and value range;
//! - [`micronet`]: a small fully-connected trainer for swapping activations;
//! - [`bench`]: a wall-clock harness for elementwise evaluation.

pub mod activation;
pub mod bench;
pub mod error;
pub mod fast_log;
pub mod micronet;
pub mod props;
pub mod report;
mod simd;

pub use activation::{
    activation_grad, activation_value, softmax, stl_grad, stl_value, Activation, ActivationKind,
    DeclaredProperties, RangeClass, Sign,
};
pub use error::{Error, Result};
pub use fast_log::{
    build_lut, decompose_binary32, fast_log2, fast_stl, log2_poly, Binary32Parts, Log2Lut, Log2Mode,
};
pub use props::{render_property_table, PropertyGrid, PropertyReport};
