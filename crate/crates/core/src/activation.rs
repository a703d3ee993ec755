//! Exact double-precision activations and their derivatives.
//!
//! [`Activation`] covers the ten elementwise functions. [`ActivationKind`]
//! adds softmax, which only makes sense on a vector, and is the name space
//! shared by the property table and the command line.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STL_ALPHA: f64 = 1.0;
pub const DEFAULT_PRELU_ALPHA: f64 = 0.01;
pub const DEFAULT_ELU_ALPHA: f64 = 1.0;
pub const DEFAULT_NLRELU_ALPHA: f64 = 1.0;

/// Sign of a real number, with `Sign::of(0.0) == Sign::Zero`.
///
/// NaN maps to `Zero`; the STL log branch still returns NaN for it because
/// `ln(NaN)` is NaN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative = -1,
    Zero = 0,
    Positive = 1,
}

impl Sign {
    #[inline]
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }
}

fn check_alpha(what: &'static str, alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveParam { what, value: alpha })
    }
}

#[inline]
pub(crate) fn stl_unchecked(x: f64, alpha: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        alpha * x
    } else {
        alpha * Sign::of(x).as_f64() * (ax.ln() + 1.0)
    }
}

#[inline]
pub(crate) fn stl_grad_unchecked(x: f64, alpha: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        alpha
    } else {
        alpha / ax
    }
}

/// Signed and truncated logarithm: `alpha * x` on `|x| <= 1`, otherwise
/// `alpha * sign(x) * (ln|x| + 1)`.
///
/// Both branches give `±alpha` at `|x| = 1`. NaN and infinities pass through.
pub fn stl_value(x: f64, alpha: f64) -> Result<f64> {
    check_alpha("STL alpha", alpha)?;
    Ok(stl_unchecked(x, alpha))
}

/// Derivative of [`stl_value`]: `alpha` on `|x| <= 1`, `alpha / |x|` outside.
/// Always in `(0, alpha]` for finite `x`.
pub fn stl_grad(x: f64, alpha: f64) -> Result<f64> {
    check_alpha("STL alpha", alpha)?;
    Ok(stl_grad_unchecked(x, alpha))
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow for large `x`.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

// Abramowitz & Stegun 7.1.26, |error| <= 1.5e-7 on the whole real line.
const ERF_P: f64 = 0.327_591_1;
const ERF_A: [f64; 5] = [
    0.254_829_592,
    -0.284_496_736,
    1.421_413_741,
    -1.453_152_027,
    1.061_405_429,
];

/// Rational approximation of the error function (A&S 7.1.26), extended to
/// negative arguments by oddness. Note `erf(0)` evaluates to about 1e-9,
/// inside the stated error bound.
pub fn erf(x: f64) -> f64 {
    let t = x.abs();
    let k = 1.0 / (1.0 + ERF_P * t);
    let poly = k * (ERF_A[0] + k * (ERF_A[1] + k * (ERF_A[2] + k * (ERF_A[3] + k * ERF_A[4]))));
    let y = 1.0 - poly * (-t * t).exp();
    if x < 0.0 {
        -y
    } else {
        y
    }
}

/// Exact derivative of [`erf`] as implemented (not of the true error
/// function), so that finite differences of Serf agree with its gradient.
pub fn erf_grad(x: f64) -> f64 {
    let t = x.abs();
    let k = 1.0 / (1.0 + ERF_P * t);
    let poly = k * (ERF_A[0] + k * (ERF_A[1] + k * (ERF_A[2] + k * (ERF_A[3] + k * ERF_A[4]))));
    let dpoly_dk = ERF_A[0]
        + k * (2.0 * ERF_A[1] + k * (3.0 * ERF_A[2] + k * (4.0 * ERF_A[3] + k * 5.0 * ERF_A[4])));
    // d/dt [1 - P(k(t)) e^{-t^2}] with dk/dt = -p k^2
    (-t * t).exp() * (ERF_P * k * k * dpoly_dk + 2.0 * t * poly)
}

/// Elementwise activation with its parameter, if it has one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    Relu,
    Prelu { alpha: f64 },
    Elu { alpha: f64 },
    Swish,
    Tanh,
    Softsign,
    Nlrelu { alpha: f64 },
    Serf,
    Stl { alpha: f64 },
}

impl Activation {
    pub const STL: Activation = Activation::Stl {
        alpha: DEFAULT_STL_ALPHA,
    };
    pub const PRELU: Activation = Activation::Prelu {
        alpha: DEFAULT_PRELU_ALPHA,
    };
    pub const ELU: Activation = Activation::Elu {
        alpha: DEFAULT_ELU_ALPHA,
    };
    pub const NLRELU: Activation = Activation::Nlrelu {
        alpha: DEFAULT_NLRELU_ALPHA,
    };

    /// The ten scalar activations with default parameters, in table order.
    pub const ALL: [Activation; 10] = [
        Activation::Sigmoid,
        Activation::Relu,
        Activation::PRELU,
        Activation::ELU,
        Activation::Swish,
        Activation::Tanh,
        Activation::Softsign,
        Activation::NLRELU,
        Activation::Serf,
        Activation::STL,
    ];

    pub fn stl(alpha: f64) -> Result<Activation> {
        check_alpha("STL alpha", alpha)?;
        Ok(Activation::Stl { alpha })
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            Activation::Stl { alpha } => check_alpha("STL alpha", alpha)?,
            Activation::Elu { alpha } => check_alpha("ELU alpha", alpha)?,
            Activation::Nlrelu { alpha } => check_alpha("NLReLU alpha", alpha)?,
            Activation::Prelu { alpha } if !alpha.is_finite() => {
                return Err(Error::NonPositiveParam {
                    what: "PReLU alpha",
                    value: alpha,
                });
            }
            _ => {}
        }
        Ok(self)
    }

    pub fn kind(self) -> ActivationKind {
        ActivationKind::Scalar(self)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Prelu { .. } => "prelu",
            Activation::Elu { .. } => "elu",
            Activation::Swish => "swish",
            Activation::Tanh => "tanh",
            Activation::Softsign => "softsign",
            Activation::Nlrelu { .. } => "nlrelu",
            Activation::Serf => "serf",
            Activation::Stl { .. } => "stl",
        }
    }

    pub fn param(self) -> Option<f64> {
        match self {
            Activation::Prelu { alpha }
            | Activation::Elu { alpha }
            | Activation::Nlrelu { alpha }
            | Activation::Stl { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Same activation with its parameter replaced. Parameterless kinds are
    /// returned unchanged.
    pub fn with_param(self, alpha: f64) -> Result<Self> {
        let next = match self {
            Activation::Prelu { .. } => Activation::Prelu { alpha },
            Activation::Elu { .. } => Activation::Elu { alpha },
            Activation::Nlrelu { .. } => Activation::Nlrelu { alpha },
            Activation::Stl { .. } => Activation::Stl { alpha },
            other => other,
        };
        next.validate()
    }

    /// Points where the piecewise definition switches formula.
    pub fn breakpoints(self) -> &'static [f64] {
        match self {
            Activation::Relu
            | Activation::Prelu { .. }
            | Activation::Elu { .. }
            | Activation::Nlrelu { .. }
            | Activation::Softsign => &[0.0],
            Activation::Stl { .. } => &[-1.0, 1.0],
            Activation::Sigmoid | Activation::Swish | Activation::Tanh | Activation::Serf => &[],
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
            Activation::Prelu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Activation::Elu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x.exp_m1()
                }
            }
            Activation::Swish => x * sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Softsign => x / (x.abs() + 1.0),
            Activation::Nlrelu { alpha } => (alpha * x.max(0.0)).ln_1p(),
            Activation::Serf => x * erf(softplus(x)),
            Activation::Stl { alpha } => stl_unchecked(x, alpha),
        }
    }

    /// Analytic derivative. At the kink of ReLU, PReLU, ELU and NLReLU this
    /// returns the right-hand derivative.
    #[inline]
    pub fn grad(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Prelu { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
            Activation::Elu { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    alpha * x.exp()
                }
            }
            Activation::Swish => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Softsign => {
                let d = x.abs() + 1.0;
                1.0 / (d * d)
            }
            Activation::Nlrelu { alpha } => {
                if x >= 0.0 {
                    alpha / (alpha * x + 1.0)
                } else {
                    0.0
                }
            }
            Activation::Serf => {
                let sp = softplus(x);
                erf(sp) + x * erf_grad(sp) * sigmoid(x)
            }
            Activation::Stl { alpha } => stl_grad_unchecked(x, alpha),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(alpha) => write!(f, "{}(alpha={})", self.name(), alpha),
            None => f.write_str(self.name()),
        }
    }
}

/// Value-range class of an activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeClass {
    Bounded,
    LowerBounded,
    UpperBounded,
    Unbounded,
}

impl RangeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RangeClass::Bounded => "bounded",
            RangeClass::LowerBounded => "lower-bounded",
            RangeClass::UpperBounded => "upper-bounded",
            RangeClass::Unbounded => "unbounded",
        }
    }
}

impl fmt::Display for RangeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One of the eleven activations compared in the property table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Scalar(Activation),
    Softmax,
}

impl ActivationKind {
    /// Table order: sigmoid, relu, prelu, elu, swish, tanh, softsign,
    /// softmax, nlrelu, serf, stl.
    pub const ALL: [ActivationKind; 11] = [
        ActivationKind::Scalar(Activation::Sigmoid),
        ActivationKind::Scalar(Activation::Relu),
        ActivationKind::Scalar(Activation::PRELU),
        ActivationKind::Scalar(Activation::ELU),
        ActivationKind::Scalar(Activation::Swish),
        ActivationKind::Scalar(Activation::Tanh),
        ActivationKind::Scalar(Activation::Softsign),
        ActivationKind::Softmax,
        ActivationKind::Scalar(Activation::NLRELU),
        ActivationKind::Scalar(Activation::Serf),
        ActivationKind::Scalar(Activation::STL),
    ];

    pub const NAMES: [&'static str; 11] = [
        "sigmoid", "relu", "prelu", "elu", "swish", "tanh", "softsign", "softmax", "nlrelu",
        "serf", "stl",
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Scalar(a) => a.name(),
            ActivationKind::Softmax => "softmax",
        }
    }

    /// Position in [`ActivationKind::ALL`]; used to sort reports.
    pub fn table_index(self) -> usize {
        Self::NAMES
            .iter()
            .position(|n| *n == self.name())
            .expect("every kind has a table row")
    }

    pub fn scalar(self) -> Result<Activation> {
        match self {
            ActivationKind::Scalar(a) => Ok(a),
            ActivationKind::Softmax => Err(Error::NotScalar("softmax")),
        }
    }

    pub fn declared(self) -> DeclaredProperties {
        DeclaredProperties::of(self)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or(Error::UnknownActivation(s.to_string()))
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ActivationKind>()?.scalar()
    }
}

/// Declared properties of an activation as listed in the published
/// comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeclaredProperties {
    pub kind: ActivationKind,
    pub declared_odd: bool,
    pub declared_monotone: bool,
    pub declared_differentiable: bool,
    pub declared_continuous_gradient: bool,
    pub declared_range: RangeClass,
}

impl DeclaredProperties {
    pub fn of(kind: ActivationKind) -> DeclaredProperties {
        use RangeClass::*;
        // odd, monotone, differentiable, continuous gradient, range
        let (odd, mono, diff, cont, range) = match kind {
            ActivationKind::Scalar(a) => match a {
                Activation::Sigmoid => (false, true, true, true, Bounded),
                Activation::Relu => (false, true, false, false, LowerBounded),
                Activation::Prelu { .. } => (false, true, false, false, Unbounded),
                Activation::Elu { .. } => (false, true, true, false, LowerBounded),
                Activation::Swish => (false, false, true, true, LowerBounded),
                Activation::Tanh => (true, true, true, true, Bounded),
                Activation::Softsign => (true, true, true, true, Bounded),
                Activation::Nlrelu { .. } => (false, true, false, false, LowerBounded),
                Activation::Serf => (false, false, true, true, LowerBounded),
                Activation::Stl { .. } => (true, true, true, true, Unbounded),
            },
            ActivationKind::Softmax => (false, false, true, true, Bounded),
        };
        DeclaredProperties {
            kind,
            declared_odd: odd,
            declared_monotone: mono,
            declared_differentiable: diff,
            declared_continuous_gradient: cont,
            declared_range: range,
        }
    }
}

/// Value of a scalar activation. Softmax is rejected; use [`softmax`].
pub fn activation_value(kind: ActivationKind, x: f64) -> Result<f64> {
    Ok(kind.scalar()?.validate()?.value(x))
}

/// Derivative of a scalar activation (right-hand derivative at kinks).
pub fn activation_grad(kind: ActivationKind, x: f64) -> Result<f64> {
    Ok(kind.scalar()?.validate()?.grad(x))
}

/// Softmax with the maximum subtracted before exponentiation.
pub fn softmax(xs: &[f64]) -> Result<Vec<f64>> {
    let mut out = xs.to_vec();
    softmax_in_place(&mut out)?;
    Ok(out)
}

pub fn softmax_in_place(xs: &mut [f64]) -> Result<()> {
    let max = xs
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::EmptyInput)?;
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn central_fd(a: Activation, x: f64, h: f64) -> f64 {
        let (xp, xm) = (x + h, x - h);
        (a.value(xp) - a.value(xm)) / (xp - xm)
    }

    #[test]
    fn stl_examples() {
        assert_eq!(stl_value(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(stl_value(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(stl_value(-1.0, 1.0).unwrap(), -1.0);
        assert!((stl_value(E, 1.0).unwrap() - 2.0).abs() < 1e-15);
        // ln(10) + 1 from the library log
        assert!((stl_value(10.0, 1.0).unwrap() - 3.302_585_092_994_046).abs() < 1e-14);
    }

    #[test]
    fn stl_grad_examples() {
        assert_eq!(stl_grad(0.5, 1.0).unwrap(), 1.0);
        assert_eq!(stl_grad(5.0, 1.0).unwrap(), 0.2);
        assert_eq!(stl_grad(-5.0, 0.5).unwrap(), 0.1);
    }

    #[test]
    fn stl_rejects_bad_alpha() {
        for alpha in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                stl_value(2.0, alpha),
                Err(Error::NonPositiveParam { .. })
            ));
            assert!(stl_grad(2.0, alpha).is_err());
        }
    }

    #[test]
    fn stl_propagates_non_finite() {
        assert!(stl_value(f64::NAN, 1.0).unwrap().is_nan());
        assert_eq!(stl_value(f64::INFINITY, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(
            stl_value(f64::NEG_INFINITY, 1.0).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn stl_branches_meet_at_one() {
        for alpha in [0.1, 1.0, 3.0] {
            let linear = alpha * 1.0;
            let log = alpha * (1.0f64.ln() + 1.0);
            assert_eq!(linear, log);
            assert_eq!(stl_value(1.0, alpha).unwrap(), alpha);
            assert_eq!(stl_grad(1.0, alpha).unwrap(), alpha);
            assert_eq!(alpha / 1.0f64, alpha);
        }
    }

    #[test]
    fn sign_at_zero() {
        assert_eq!(Sign::of(0.0), Sign::Zero);
        assert_eq!(Sign::of(-0.0), Sign::Zero);
        assert_eq!(Sign::of(-3.0).value(), -1);
        assert_eq!(Sign::of(2.0).value(), 1);
    }

    #[test]
    fn reference_activation_examples() {
        let k = |a: Activation| a.kind();
        assert_eq!(activation_value(k(Activation::Sigmoid), 0.0).unwrap(), 0.5);
        let s = activation_value(k(Activation::Softsign), 1000.0).unwrap();
        assert!((s - 1000.0 / 1001.0).abs() < 1e-15);
        assert!((s - 0.999001).abs() < 1e-6);
        assert_eq!(activation_value(k(Activation::Relu), -3.0).unwrap(), 0.0);
        let n = activation_value(k(Activation::NLRELU), E - 1.0).unwrap();
        assert!((n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_gradient_examples() {
        assert_eq!(Activation::Sigmoid.grad(0.0), 0.25);
        assert_eq!(Activation::Tanh.grad(0.0), 1.0);
        assert_eq!(Activation::Softsign.grad(0.0), 1.0);
        // right-hand derivatives at the kink
        assert_eq!(Activation::Relu.grad(0.0), 1.0);
        assert_eq!(Activation::PRELU.grad(0.0), 1.0);
        assert_eq!(Activation::NLRELU.grad(0.0), 1.0);
    }

    #[test]
    fn softmax_is_not_scalar() {
        assert!(matches!(
            activation_value(ActivationKind::Softmax, 1.0),
            Err(Error::NotScalar(_))
        ));
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        for p in softmax(&[1000.0, 1000.0, 1000.0]).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax(&[0.0, 3.0f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        assert!(matches!(softmax(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn erf_matches_reference_values() {
        // values of the true error function
        let table = [
            (0.0, 0.0),
            (0.5, 0.520_499_877_813_046_5),
            (1.0, 0.842_700_792_949_714_9),
            (2.0, 0.995_322_265_018_952_7),
            (-1.0, -0.842_700_792_949_714_9),
        ];
        for (x, want) in table {
            assert!((erf(x) - want).abs() <= 1.5e-7, "erf({x})");
        }
    }

    #[test]
    fn erf_grad_matches_fd() {
        for i in 1..400 {
            let t = i as f64 * 0.01;
            let h = 1e-6;
            let fd = (erf(t + h) - erf(t - h)) / (2.0 * h);
            assert!((fd - erf_grad(t)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-6;
        let acts = Activation::ALL.into_iter().chain([
            Activation::Elu { alpha: 0.5 },
            Activation::stl(0.3).unwrap(),
        ]);
        for a in acts {
            let mut x = -30.0;
            while x <= 30.0 {
                let near_kink = a.breakpoints().iter().any(|k| (x - k).abs() < 1e-3);
                if !near_kink {
                    let g = a.grad(x);
                    let fd = central_fd(a, x, h);
                    assert!(
                        (g - fd).abs() / g.abs().max(1.0) <= 1e-6,
                        "{a} at {x}: analytic {g} vs fd {fd}"
                    );
                }
                x += 0.0137;
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for (kind, name) in ActivationKind::ALL.iter().zip(ActivationKind::NAMES) {
            assert_eq!(kind.name(), name);
            assert_eq!(name.parse::<ActivationKind>().unwrap(), *kind);
            assert_eq!(
                kind.table_index(),
                ActivationKind::NAMES
                    .iter()
                    .position(|n| *n == name)
                    .unwrap()
            );
        }
        assert!("gelu".parse::<ActivationKind>().is_err());
        assert!("softmax".parse::<Activation>().is_err());
    }
}
