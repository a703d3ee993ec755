//! Grid-based numerical checks of the six activation properties.
//!
//! Every check is a pure function of the activation, the grid and the
//! tolerances, and every failure carries a witness input that reproduces it.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use crate::activation::{softmax, stl_grad_unchecked, Activation, ActivationKind, RangeClass};
use crate::error::{Error, Result};

pub const ODD_TOL: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-6;
pub const CONTINUITY_TOL: f64 = 1e-6;
/// Steps at which both sides of a breakpoint are compared; the gap must
/// shrink with them.
pub const CONTINUITY_EPS: [f64; 3] = [1e-3, 1e-4, 1e-5];
/// Allowed gap per unit of `eps` for a continuous gradient (a local
/// Lipschitz constant of the gradient).
pub const CONTINUITY_SLOPE: f64 = 10.0;
/// Probe magnitudes for the range classifier.
pub const RANGE_PROBES: [f64; 2] = [1e3, 1e6];
/// A side counts as unbounded when the activation moves outward by more
/// than this between the smallest and largest probe.
pub const RANGE_GROWTH: f64 = 1.0;

/// Strictly increasing evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyGrid {
    points: Vec<f64>,
}

impl PropertyGrid {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("grid points must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(PropertyGrid { points })
    }

    /// `uniform` points evenly on `[-inner, inner]` plus `log_points` points
    /// per side, log-spaced on `(inner, outer]`.
    pub fn symmetric(inner: f64, outer: f64, uniform: usize, log_points: usize) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && uniform >= 2) {
            return Err(Error::InvalidConfig(format!(
                "grid needs 0 < inner < outer and >= 2 uniform points, got inner={inner} outer={outer} uniform={uniform}"
            )));
        }
        let half = (uniform - 1) as f64 / 2.0;
        let mut points: Vec<f64> = (0..uniform)
            .map(|i| inner * (i as f64 - half) / half)
            .collect();
        let ratio = (outer / inner).ln();
        for k in 1..=log_points {
            let x = if k == log_points {
                outer
            } else {
                inner * (ratio * k as f64 / log_points as f64).exp()
            };
            points.push(x);
            points.push(-x);
        }
        Self::new(points)
    }

    /// 4001 points: 2001 uniform on `[-2, 2]` (so `0` and `±1` are exact grid
    /// points) and 1000 log-spaced per side out to `|x| = 1e4`.
    pub fn default_grid() -> Self {
        Self::symmetric(2.0, 1e4, 2001, 1000).expect("default grid parameters are valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    /// Drops points closer than `dist` to any of `avoid`.
    pub fn avoiding(&self, avoid: &[f64], dist: f64) -> Self {
        let points = self
            .points
            .iter()
            .copied()
            .filter(|x| avoid.iter().all(|k| (x - k).abs() >= dist))
            .collect();
        PropertyGrid { points }
    }
}

impl Default for PropertyGrid {
    fn default() -> Self {
        Self::default_grid()
    }
}

/// Result of one property check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Pass,
    /// Fails at `witness`; for pairwise checks `witness_hi` is the second
    /// point. `measure` is the size of the violation.
    Fail {
        witness: f64,
        witness_hi: Option<f64>,
        measure: f64,
    },
    /// The property has no scalar meaning for this activation.
    NotApplicable,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Pass)
    }

    fn fail(witness: f64, measure: f64) -> Self {
        Outcome::Fail {
            witness,
            witness_hi: None,
            measure,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail { .. } => "fail",
            Outcome::NotApplicable => "n/a",
        }
    }

    fn witness_text(&self) -> String {
        match self {
            Outcome::Fail {
                witness,
                witness_hi: Some(hi),
                ..
            } => format!("{witness};{hi}"),
            Outcome::Fail { witness, .. } => witness.to_string(),
            _ => String::new(),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())?;
        if let Outcome::Fail { .. } = self {
            write!(f, " @ {}", self.witness_text())?;
        }
        Ok(())
    }
}

/// Oddness: `|f(x) + f(-x)| <= tol * max(1, |f(x)|)` on the grid and
/// `|f(0)| <= tol`. The witness is the worst normalized violation.
pub fn check_odd(act: Activation, grid: &PropertyGrid, tol: f64) -> Outcome {
    let zero = act.value(0.0).abs();
    let mut worst: Option<(f64, f64)> = (zero > tol).then_some((0.0, zero));
    for &x in grid.points() {
        let fx = act.value(x);
        let err = (fx + act.value(-x)).abs() / fx.abs().max(1.0);
        if err > tol && worst.is_none_or(|(_, w)| err > w) {
            worst = Some((x, err));
        }
    }
    match worst {
        None => Outcome::Pass,
        Some((x, err)) => Outcome::fail(x, err),
    }
}

/// Non-decreasing on consecutive grid pairs. The reported pair is the
/// violation closest to the right end of the grid, which for a function
/// with a single decreasing stretch sits next to its turning point.
pub fn check_monotone(act: Activation, grid: &PropertyGrid) -> Outcome {
    let pts = grid.points();
    let values: Vec<f64> = pts.iter().map(|&x| act.value(x)).collect();
    (0..pts.len().saturating_sub(1))
        .rev()
        .find(|&i| values[i] > values[i + 1])
        .map_or(Outcome::Pass, |i| Outcome::Fail {
            witness: pts[i],
            witness_hi: Some(pts[i + 1]),
            measure: values[i] - values[i + 1],
        })
}

/// Central difference with the step actually representable at `x`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let (xp, xm) = (x + h, x - h);
    (f(xp) - f(xm)) / (xp - xm)
}

/// Analytic gradient vs central difference at every grid point:
/// `|grad - fd| / max(1, |grad|) <= tol`. The caller keeps the grid clear
/// of kinks when it wants a smooth-region check.
pub fn check_gradient_fd(act: Activation, grid: &PropertyGrid, h: f64, tol: f64) -> (Outcome, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for &x in grid.points() {
        let g = act.grad(x);
        let fd = central_difference(|t| act.value(t), x, h);
        let err = (g - fd).abs() / g.abs().max(1.0);
        if err > worst.1 || err.is_nan() {
            worst = (x, err);
        }
    }
    let outcome = if worst.1 <= tol {
        Outcome::Pass
    } else {
        Outcome::fail(worst.0, worst.1)
    };
    (outcome, worst.1)
}

fn side_gap_check(kinks: &[f64], tol: f64, gap: impl Fn(f64, f64) -> f64) -> Outcome {
    for &k in kinks {
        for eps in CONTINUITY_EPS {
            let g = gap(k, eps);
            if g.is_nan() || g > tol + CONTINUITY_SLOPE * eps {
                return Outcome::fail(k, g);
            }
        }
    }
    Outcome::Pass
}

/// Gradient continuity at each kink: `|grad(k-eps) - grad(k+eps)|` must
/// stay within `tol + CONTINUITY_SLOPE * eps` for every `eps` in
/// [`CONTINUITY_EPS`], i.e. the jump closes as `eps` shrinks.
pub fn check_gradient_continuity(act: Activation, kinks: &[f64], tol: f64) -> Outcome {
    side_gap_check(kinks, tol, |k, eps| {
        (act.grad(k - eps) - act.grad(k + eps)).abs()
    })
}

/// Differentiability at each kink from function values alone: the left and
/// right one-sided difference quotients must agree as the step shrinks.
pub fn check_differentiable(act: Activation, kinks: &[f64], tol: f64) -> Outcome {
    side_gap_check(kinks, tol, |k, h| {
        let fk = act.value(k);
        let left = (fk - act.value(k - h)) / h;
        let right = (act.value(k + h) - fk) / h;
        (right - left).abs()
    })
}

/// Every grid gradient strictly positive and finite.
pub fn check_gradient_nonvanishing(act: Activation, grid: &PropertyGrid) -> Outcome {
    grid.points()
        .iter()
        .find(|&&x| {
            let g = act.grad(x);
            !(g > 0.0 && g.is_finite())
        })
        .map_or(Outcome::Pass, |&x| Outcome::fail(x, act.grad(x)))
}

fn classify_range(f: impl Fn(f64) -> f64, probes: &[f64]) -> RangeClass {
    let mut mags: Vec<f64> = probes.iter().map(|p| p.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let (near, far) = (mags[0], mags[mags.len() - 1]);
    let upper = f(far) - f(near) > RANGE_GROWTH;
    let lower = f(-near) - f(-far) > RANGE_GROWTH;
    match (lower, upper) {
        (true, true) => RangeClass::Unbounded,
        (false, true) => RangeClass::LowerBounded,
        (true, false) => RangeClass::UpperBounded,
        (false, false) => RangeClass::Bounded,
    }
}

/// Classifies the value range by how far the function moves outward between
/// the smallest and largest probe magnitude on each side. Logarithmic growth
/// (about 6.9 between 1e3 and 1e6) counts as unbounded; saturating functions
/// move by less than 1e-2.
pub fn check_range_class(act: Activation, probes: &[f64]) -> Result<RangeClass> {
    if probes.len() < 2 {
        return Err(Error::InvalidConfig(
            "range classification needs at least two probe magnitudes".into(),
        ));
    }
    Ok(classify_range(|x| act.value(x), probes))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub alpha: f64,
    pub max_grad: f64,
    pub argmax: f64,
    pub passed: bool,
}

/// STL with `0 < alpha < 1` has `sup |f'| = alpha < 1`.
pub fn check_contraction(alpha: f64, grid: &PropertyGrid) -> Result<ContractionReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfDomain {
            what: "contraction alpha",
            value: alpha,
            range: "(0, 1)",
        });
    }
    let (argmax, max_grad) = grid
        .points()
        .iter()
        .map(|&x| (x, stl_grad_unchecked(x, alpha).abs()))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    Ok(ContractionReport {
        alpha,
        max_grad,
        argmax,
        passed: max_grad < 1.0,
    })
}

/// Measured properties of one activation.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub kind: ActivationKind,
    pub odd: Outcome,
    pub monotone: Outcome,
    pub differentiable: Outcome,
    pub gradient_fd: Outcome,
    pub gradient_fd_max_err: f64,
    pub gradient_continuous: Outcome,
    pub gradient_nonvanishing: Outcome,
    pub range_class: RangeClass,
    /// Softmax only: outputs sum to one and ignore a common shift.
    pub vector_checks: Option<Outcome>,
}

impl PropertyReport {
    /// Columns that disagree with the declared table entry.
    pub fn mismatches(&self) -> Vec<&'static str> {
        let declared = self.kind.declared();
        let agrees = |o: &Outcome, declared: bool| match o {
            Outcome::Pass => declared,
            Outcome::Fail { .. } => !declared,
            // not-applicable stands in for the table's cross
            Outcome::NotApplicable => !declared,
        };
        let mut out = Vec::new();
        if !agrees(&self.odd, declared.declared_odd) {
            out.push("odd");
        }
        if !agrees(&self.monotone, declared.declared_monotone) {
            out.push("monotone");
        }
        if !agrees(&self.differentiable, declared.declared_differentiable) {
            out.push("differentiable");
        }
        if !agrees(
            &self.gradient_continuous,
            declared.declared_continuous_gradient,
        ) {
            out.push("continuous_gradient");
        }
        if self.range_class != declared.declared_range {
            out.push("range");
        }
        out
    }

    pub fn all_pass(&self) -> bool {
        [
            &self.odd,
            &self.monotone,
            &self.differentiable,
            &self.gradient_fd,
            &self.gradient_continuous,
            &self.gradient_nonvanishing,
        ]
        .iter()
        .all(|o| o.passed())
            && self.range_class == RangeClass::Unbounded
    }
}

/// Tolerances and grid used for a property table.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub grid: PropertyGrid,
    pub odd_tol: f64,
    pub fd_step: f64,
    pub fd_tol: f64,
    pub continuity_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            grid: PropertyGrid::default_grid(),
            odd_tol: ODD_TOL,
            fd_step: FD_STEP,
            fd_tol: FD_TOL,
            continuity_tol: CONTINUITY_TOL,
        }
    }
}

fn breakpoints_with_origin(act: Activation) -> Vec<f64> {
    let mut kinks = act.breakpoints().to_vec();
    if !kinks.contains(&0.0) {
        kinks.push(0.0);
    }
    kinks
}

pub fn scalar_report(act: Activation, cfg: &SuiteConfig) -> PropertyReport {
    let kinks = breakpoints_with_origin(act);
    let smooth = cfg.grid.avoiding(act.breakpoints(), 10.0 * cfg.fd_step);
    let (gradient_fd, gradient_fd_max_err) =
        check_gradient_fd(act, &smooth, cfg.fd_step, cfg.fd_tol);
    PropertyReport {
        kind: act.kind(),
        odd: check_odd(act, &cfg.grid, cfg.odd_tol),
        monotone: check_monotone(act, &cfg.grid),
        differentiable: check_differentiable(act, &kinks, cfg.continuity_tol),
        gradient_fd,
        gradient_fd_max_err,
        gradient_continuous: check_gradient_continuity(act, &kinks, cfg.continuity_tol),
        gradient_nonvanishing: check_gradient_nonvanishing(act, &cfg.grid),
        range_class: classify_range(|x| act.value(x), &RANGE_PROBES),
        vector_checks: None,
    }
}

/// First component of `softmax([x, 0])`, the scalar slice used to measure
/// softmax's range, smoothness and gradient.
fn softmax_slice(x: f64) -> f64 {
    softmax(&[x, 0.0]).expect("two-element input")[0]
}

fn softmax_slice_grad(x: f64) -> f64 {
    let s = softmax_slice(x);
    s * (1.0 - s)
}

/// Sum-to-one and shift invariance on vectors built from consecutive grid
/// windows. The witness is the window start.
pub fn check_softmax_vectors(grid: &PropertyGrid, tol: f64) -> Outcome {
    let pts = grid.points();
    for (i, window) in pts.windows(3).enumerate().step_by(7) {
        let p = softmax(window).expect("non-empty window");
        let sum_err = (p.iter().sum::<f64>() - 1.0).abs();
        if sum_err > tol {
            return Outcome::fail(pts[i], sum_err);
        }
        for shift in [-1000.0, 3.5, 1000.0] {
            let shifted: Vec<f64> = window.iter().map(|x| x + shift).collect();
            let q = softmax(&shifted).expect("non-empty window");
            let err = p
                .iter()
                .zip(&q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if err > tol {
                return Outcome::fail(pts[i], err);
            }
        }
    }
    Outcome::Pass
}

fn softmax_report(cfg: &SuiteConfig) -> PropertyReport {
    let kinks = [0.0];
    let side_gap = |tol: f64, gap: &dyn Fn(f64, f64) -> f64| side_gap_check(&kinks, tol, gap);
    let smooth = &cfg.grid;
    let mut worst = 0.0f64;
    let mut witness = 0.0;
    for &x in smooth.points() {
        let g = softmax_slice_grad(x);
        let err = (g - central_difference(softmax_slice, x, cfg.fd_step)).abs() / g.abs().max(1.0);
        if err > worst {
            worst = err;
            witness = x;
        }
    }
    let gradient_fd = if worst <= cfg.fd_tol {
        Outcome::Pass
    } else {
        Outcome::fail(witness, worst)
    };
    PropertyReport {
        kind: ActivationKind::Softmax,
        odd: Outcome::NotApplicable,
        monotone: Outcome::NotApplicable,
        differentiable: side_gap(cfg.continuity_tol, &|k, h| {
            let fk = softmax_slice(k);
            ((softmax_slice(k + h) - fk) / h - (fk - softmax_slice(k - h)) / h).abs()
        }),
        gradient_fd,
        gradient_fd_max_err: worst,
        gradient_continuous: side_gap(cfg.continuity_tol, &|k, eps| {
            (softmax_slice_grad(k - eps) - softmax_slice_grad(k + eps)).abs()
        }),
        gradient_nonvanishing: cfg
            .grid
            .points()
            .iter()
            .find(|&&x| softmax_slice_grad(x) <= 0.0)
            .map_or(Outcome::Pass, |&x| Outcome::fail(x, softmax_slice_grad(x))),
        range_class: classify_range(softmax_slice, &RANGE_PROBES),
        vector_checks: Some(check_softmax_vectors(&cfg.grid, 1e-12)),
    }
}

pub fn report_for(kind: ActivationKind, cfg: &SuiteConfig) -> PropertyReport {
    match kind {
        ActivationKind::Scalar(act) => scalar_report(act, cfg),
        ActivationKind::Softmax => softmax_report(cfg),
    }
}

/// One report per kind, sorted into table order.
pub fn render_property_table(kinds: &[ActivationKind], cfg: &SuiteConfig) -> Vec<PropertyReport> {
    let mut reports: Vec<PropertyReport> = kinds.iter().map(|&k| report_for(k, cfg)).collect();
    reports.sort_by_key(|r| r.kind.table_index());
    reports
}

/// Flat CSV form of a [`PropertyReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub activation: String,
    pub param: Option<f64>,
    pub odd: String,
    pub odd_witness: String,
    pub monotone: String,
    pub monotone_witness: String,
    pub differentiable: String,
    pub differentiable_witness: String,
    pub gradient_fd: String,
    pub gradient_fd_max_err: f64,
    pub continuous_gradient: String,
    pub continuous_gradient_witness: String,
    pub nonvanishing_gradient: String,
    pub nonvanishing_gradient_witness: String,
    pub range: RangeClass,
    pub vector_checks: String,
}

impl From<&PropertyReport> for PropertyRow {
    fn from(r: &PropertyReport) -> Self {
        PropertyRow {
            activation: r.kind.name().to_string(),
            param: r.kind.scalar().ok().and_then(Activation::param),
            odd: r.odd.label().into(),
            odd_witness: r.odd.witness_text(),
            monotone: r.monotone.label().into(),
            monotone_witness: r.monotone.witness_text(),
            differentiable: r.differentiable.label().into(),
            differentiable_witness: r.differentiable.witness_text(),
            gradient_fd: r.gradient_fd.label().into(),
            gradient_fd_max_err: r.gradient_fd_max_err,
            continuous_gradient: r.gradient_continuous.label().into(),
            continuous_gradient_witness: r.gradient_continuous.witness_text(),
            nonvanishing_gradient: r.gradient_nonvanishing.label().into(),
            nonvanishing_gradient_witness: r.gradient_nonvanishing.witness_text(),
            range: r.range_class,
            vector_checks: r.vector_checks.map_or("n/a", |o| o.label()).into(),
        }
    }
}

pub fn write_property_csv<W: io::Write>(reports: &[PropertyReport], sink: W) -> Result<()> {
    let rows: Vec<PropertyRow> = reports.iter().map(PropertyRow::from).collect();
    crate::report::write_rows(&rows, sink)
}

pub fn read_property_csv<R: io::Read>(source: R) -> Result<Vec<PropertyRow>> {
    crate::report::read_rows(source)
}
