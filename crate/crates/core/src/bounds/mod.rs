//! Midpoint and trapezoid gaps, their right-hand-side bounds, and
//! verification of single inequality instances.
//!
//! All integrals are taken in the segment parameter: `∫_a^{a+L} g(x) dx`
//! is computed as `L ∫_0^1 g(a + tL) dt`, so error estimates for means are
//! absolute on the scale of `g`.

pub mod formulas;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::function::DifferentiableFunction;
use crate::invex::{ConvexityClass, EtaMap};
use crate::quadrature::{integrate_with, QuadratureOptions};

/// Default allowance beyond the error budget before an instance counts as
/// violated.
pub const DEFAULT_VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Theorem {
    HhChain,
    T12,
    T22,
    T23,
    T31,
    T32,
    T33,
    T34,
    T35,
    Tz,
    Tfd,
    Cq,
    Cq1,
    /// Log-preinvex bound along an η-path.
    Eq1,
    /// Hölder log-preinvex bound along an η-path.
    Eq2,
}

/// Which quantity a theorem bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    Midpoint,
    Trapezoid,
    Chain,
}

/// What must belong to which class for a theorem to apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    /// `None` for `f` itself, `Some(s)` for `|f'|^s`.
    pub derivative_power: Option<f64>,
    pub class: ConvexityClass,
    /// Classical statements assume `η(v,u) = v − u`.
    pub canonical_eta: bool,
}

impl Theorem {
    /// The multivariable theorems, verified through [`crate::multivar`].
    pub const MULTIVAR: [Theorem; 2] = [Theorem::Eq1, Theorem::Eq2];

    /// The one-dimensional theorems.
    pub const ALL: [Theorem; 13] = [
        Theorem::HhChain,
        Theorem::T12,
        Theorem::T22,
        Theorem::T23,
        Theorem::T31,
        Theorem::T32,
        Theorem::T33,
        Theorem::T34,
        Theorem::T35,
        Theorem::Tz,
        Theorem::Tfd,
        Theorem::Cq,
        Theorem::Cq1,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Theorem::HhChain => "HHchain",
            Theorem::T12 => "T1.2",
            Theorem::T22 => "T2.2",
            Theorem::T23 => "T2.3",
            Theorem::T31 => "T3.1",
            Theorem::T32 => "T3.2",
            Theorem::T33 => "T3.3",
            Theorem::T34 => "T3.4",
            Theorem::T35 => "T3.5",
            Theorem::Tz => "Tz",
            Theorem::Tfd => "Tfd",
            Theorem::Cq => "Cq",
            Theorem::Cq1 => "Cq1",
            Theorem::Eq1 => "Eq1",
            Theorem::Eq2 => "Eq2",
        }
    }

    pub fn gap(self) -> GapKind {
        match self {
            Theorem::HhChain => GapKind::Chain,
            Theorem::T22 | Theorem::T23 => GapKind::Trapezoid,
            _ => GapKind::Midpoint,
        }
    }

    /// Uses `b − a` in place of `η(b,a)`.
    pub fn is_classical(self) -> bool {
        matches!(self, Theorem::T12 | Theorem::Cq | Theorem::Cq1)
    }

    pub fn is_multivar(self) -> bool {
        matches!(self, Theorem::Eq1 | Theorem::Eq2)
    }

    pub fn needs_p(self) -> bool {
        matches!(
            self,
            Theorem::T22 | Theorem::T32 | Theorem::T33 | Theorem::Tfd | Theorem::Cq1 | Theorem::Eq2
        )
    }

    pub fn needs_q(self) -> bool {
        matches!(
            self,
            Theorem::T34 | Theorem::T35 | Theorem::Tfd | Theorem::Cq1 | Theorem::Eq2
        )
    }

    /// Hypothesis under resolved parameters.
    pub fn hypothesis(self, params: &BoundParams) -> Hypothesis {
        let conj = params.p.map(|p| p / (p - 1.0));
        let (power, class) = match self {
            Theorem::HhChain => (None, ConvexityClass::Preinvex),
            Theorem::T12 | Theorem::T31 => (Some(1.0), ConvexityClass::Preinvex),
            Theorem::T22 => (conj, ConvexityClass::Prequasiinvex),
            Theorem::T23 => (Some(1.0), ConvexityClass::Prequasiinvex),
            Theorem::T32 | Theorem::T33 => (conj, ConvexityClass::Preinvex),
            Theorem::T34 | Theorem::T35 => (params.q, ConvexityClass::Preinvex),
            Theorem::Tz | Theorem::Cq => (Some(1.0), ConvexityClass::LogPreinvex),
            Theorem::Tfd | Theorem::Cq1 => (params.q, ConvexityClass::LogPreinvex),
            // f itself, along the path
            Theorem::Eq1 | Theorem::Eq2 => (None, ConvexityClass::LogPreinvex),
        };
        Hypothesis {
            derivative_power: power,
            class,
            canonical_eta: self.is_classical(),
        }
    }

    /// Statements evaluated as written although they can fail for
    /// functions meeting the hypothesis.
    pub fn as_printed_note(self) -> Option<&'static str> {
        match self {
            Theorem::T22 => Some(
                "as-printed: outer exponent p/(p-1) on the sup applied as stated; \
                 LHS uses the trapezoid gap over [a, a+eta(b,a)]",
            ),
            Theorem::T23 => Some("as-printed deviation: LHS uses the trapezoid gap over [a, a+eta(b,a)]"),
            Theorem::Tfd | Theorem::Cq1 | Theorem::Eq2 => {
                Some("as-printed: single |f'(a)|^(1/2) prefactor evaluated as stated")
            }
            _ => None,
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("T2.1") || s.eq_ignore_ascii_case("hhchain") {
            return Ok(Theorem::HhChain);
        }
        Theorem::ALL
            .into_iter()
            .chain(Theorem::MULTIVAR)
            .find(|t| t.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown theorem `{s}`")))
    }
}

impl Serialize for Theorem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

/// Exponents for the Hölder and power-mean bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BoundParams {
    pub p: Option<f64>,
    pub q: Option<f64>,
}

impl BoundParams {
    pub fn none() -> Self {
        BoundParams::default()
    }

    pub fn p(p: f64) -> Self {
        BoundParams { p: Some(p), q: None }
    }

    pub fn q(q: f64) -> Self {
        BoundParams { p: None, q: Some(q) }
    }

    pub fn pq(p: f64, q: f64) -> Self {
        BoundParams { p: Some(p), q: Some(q) }
    }

    /// Validates and keeps exactly the parameters `theorem` uses. For the
    /// conjugate pair a missing exponent is derived from the other.
    pub fn resolve(&self, theorem: Theorem) -> Result<BoundParams> {
        let need_p = |p: Option<f64>| -> Result<f64> {
            let p = p.ok_or_else(|| Error::Parameter(format!("{theorem} needs p")))?;
            if !(p.is_finite() && p > 1.0) {
                return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
            }
            Ok(p)
        };
        let need_q = |q: Option<f64>| -> Result<f64> {
            let q = q.ok_or_else(|| Error::Parameter(format!("{theorem} needs q")))?;
            if !(q.is_finite() && q >= 1.0) {
                return Err(Error::Parameter(format!("q must be at least 1, got {q}")));
            }
            Ok(q)
        };
        Ok(match (theorem.needs_p(), theorem.needs_q()) {
            (false, false) => BoundParams::none(),
            (true, false) => BoundParams::p(need_p(self.p)?),
            (false, true) => BoundParams::q(need_q(self.q)?),
            (true, true) => {
                let (p, q) = match (self.p, self.q) {
                    (Some(p), Some(q)) => (need_p(Some(p))?, need_q(Some(q))?),
                    (Some(p), None) => {
                        let p = need_p(Some(p))?;
                        (p, p / (p - 1.0))
                    }
                    (None, Some(q)) => {
                        let q = need_q(Some(q))?;
                        if q == 1.0 {
                            return Err(Error::Parameter("q = 1 has no finite conjugate p".into()));
                        }
                        (q / (q - 1.0), q)
                    }
                    (None, None) => return Err(Error::Parameter(format!("{theorem} needs p or q"))),
                };
                if (1.0 / p + 1.0 / q - 1.0).abs() > 1e-12 {
                    return Err(Error::Parameter(format!(
                        "p and q must be conjugate (1/p + 1/q = 1), got p={p}, q={q}"
                    )));
                }
                BoundParams::pq(p, q)
            }
        })
    }
}

/// `[a, a + len]` with `len = η(b,a) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub len: f64,
}

impl Segment {
    pub fn new(eta: &EtaMap, a: f64, b: f64) -> Result<Self> {
        let len = eta
            .eval_scalar(b, a)
            .map_err(|e| Error::eval(format!("eta(b={b}, a={a})"), e))?;
        Segment::with_length(a, b, len)
    }

    /// The classical segment `[a, b]`.
    pub fn classical(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Parameter(format!("need a < b, got a={a}, b={b}")));
        }
        Segment::with_length(a, b, b - a)
    }

    pub fn with_length(a: f64, b: f64, len: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Parameter("endpoints must be finite".into()));
        }
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::Orientation(len));
        }
        Ok(Segment { a, b, len })
    }

    pub fn point(&self, t: f64) -> f64 {
        self.a + t * self.len
    }

    pub fn end(&self) -> f64 {
        self.a + self.len
    }

    pub fn midpoint(&self) -> f64 {
        self.a + 0.5 * self.len
    }
}

/// A computed quantity with an absolute error allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

pub(crate) fn rounding(x: f64) -> f64 {
    8.0 * f64::EPSILON * x.abs()
}

fn value_at<F: DifferentiableFunction + ?Sized>(f: &F, x: f64) -> Result<f64> {
    f.value(x).map_err(|e| Error::eval(format!("f at x={x}"), e))
}

fn derivative_at<F: DifferentiableFunction + ?Sized>(f: &F, x: f64) -> Result<f64> {
    f.derivative(x).map_err(|e| Error::eval(format!("f' at x={x}"), e))
}

/// `∫_lo^hi w(t) g(a + tL) dt`.
fn integrate_along<G>(seg: &Segment, lo: f64, hi: f64, g: G, options: &QuadratureOptions) -> Result<Estimate>
where
    G: Fn(f64) -> std::result::Result<f64, crate::expr::EvalError>,
{
    let r = integrate_with(g, lo, hi, options).map_err(|e| match e {
        crate::quadrature::QuadratureError::Eval { x, source } => {
            Error::eval(format!("segment parameter t={x} (x={})", seg.point(x)), source)
        }
        other => other.into(),
    })?;
    Ok(Estimate {
        value: r.value,
        error: r.error,
        converged: r.converged,
    })
}

/// Mean of `f` over the segment.
pub fn segment_mean<F: DifferentiableFunction + ?Sized>(
    f: &F,
    seg: &Segment,
    options: &QuadratureOptions,
) -> Result<Estimate> {
    integrate_along(seg, 0.0, 1.0, |t| f.value(seg.point(t)), options)
}

/// `|mean of f over [a, a+L] − f(a + L/2)|`.
pub fn midpoint_gap<F: DifferentiableFunction + ?Sized>(
    f: &F,
    seg: &Segment,
    options: &QuadratureOptions,
) -> Result<Estimate> {
    let mean = segment_mean(f, seg, options)?;
    let mid = value_at(f, seg.midpoint())?;
    let diff = mean.value - mid;
    Ok(Estimate {
        value: diff.abs(),
        error: mean.error + rounding(mean.value) + rounding(mid),
        converged: mean.converged,
    })
}

/// `|(f(a) + f(a+L))/2 − mean of f over [a, a+L]|`.
pub fn trapezoid_gap<F: DifferentiableFunction + ?Sized>(
    f: &F,
    seg: &Segment,
    options: &QuadratureOptions,
) -> Result<Estimate> {
    let mean = segment_mean(f, seg, options)?;
    let ends = 0.5 * (value_at(f, seg.a)? + value_at(f, seg.end())?);
    Ok(Estimate {
        value: (ends - mean.value).abs(),
        error: mean.error + rounding(mean.value) + rounding(ends),
        converged: mean.converged,
    })
}

/// `L [∫_0^{1/2} t |f'(a+tL)| dt + ∫_{1/2}^1 (1−t) |f'(a+tL)| dt]`.
pub fn tight_kernel<F: DifferentiableFunction + ?Sized>(
    f: &F,
    seg: &Segment,
    options: &QuadratureOptions,
) -> Result<Estimate> {
    let left = integrate_along(seg, 0.0, 0.5, |t| Ok(t * f.derivative(seg.point(t))?.abs()), options)?;
    let right = integrate_along(
        seg,
        0.5,
        1.0,
        |t| Ok((1.0 - t) * f.derivative(seg.point(t))?.abs()),
        options,
    )?;
    let value = seg.len * (left.value + right.value);
    Ok(Estimate {
        value,
        error: seg.len * (left.error + right.error) + rounding(value),
        converged: left.converged && right.converged,
    })
}

/// Both sides of the integration-by-parts identity behind the midpoint
/// bounds, and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    /// `∫_0^{1/2} t f'(a+tL) dt + ∫_{1/2}^1 (t−1) f'(a+tL) dt`
    pub left: f64,
    /// `f(a + L/2)/L − (1/L²) ∫_a^{a+L} f`
    pub right: f64,
    pub residual: f64,
    /// Combined quadrature and rounding allowance of both sides.
    pub budget: f64,
}

pub fn hh_identity_residual<F: DifferentiableFunction + ?Sized>(
    f: &F,
    seg: &Segment,
    options: &QuadratureOptions,
) -> Result<IdentityResidual> {
    let first = integrate_along(seg, 0.0, 0.5, |t| Ok(t * f.derivative(seg.point(t))?), options)?;
    let second = integrate_along(seg, 0.5, 1.0, |t| Ok((t - 1.0) * f.derivative(seg.point(t))?), options)?;
    let mean = segment_mean(f, seg, options)?;
    let mid = value_at(f, seg.midpoint())?;
    let left = first.value + second.value;
    let right = (mid - mean.value) / seg.len;
    Ok(IdentityResidual {
        left,
        right,
        residual: (left - right).abs(),
        budget: first.error + second.error + (mean.error + rounding(mid) + rounding(mean.value)) / seg.len,
    })
}

/// The four terms of the preinvex Hermite–Hadamard chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainValues {
    /// `f(a + L/2)`
    pub midpoint: f64,
    /// mean of `f` over `[a, a+L]`
    pub mean: f64,
    /// `(f(a) + f(a+L))/2`
    pub trapezoid: f64,
    /// `(f(a) + f(b))/2`
    pub endpoints: f64,
}

impl ChainValues {
    pub fn as_array(&self) -> [f64; 4] {
        [self.midpoint, self.mean, self.trapezoid, self.endpoints]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainReport {
    pub values: ChainValues,
    /// `right − left` for each consecutive pair.
    pub margins: [f64; 3],
    pub budgets: [f64; 3],
    pub holds: [bool; 3],
    pub converged: bool,
}

impl ChainReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|h| *h)
    }

    /// Index of the link with the smallest slack relative to its budget.
    fn tightest(&self) -> usize {
        (0..3)
            .min_by(|&i, &j| {
                (self.margins[i] + self.budgets[i])
                    .partial_cmp(&(self.margins[j] + self.budgets[j]))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0)
    }
}

pub fn hh_chain_check<F: DifferentiableFunction + ?Sized>(
    f: &F,
    seg: &Segment,
    options: &QuadratureOptions,
) -> Result<ChainReport> {
    let mean = segment_mean(f, seg, options)?;
    let fa = value_at(f, seg.a)?;
    let values = ChainValues {
        midpoint: value_at(f, seg.midpoint())?,
        mean: mean.value,
        trapezoid: 0.5 * (fa + value_at(f, seg.end())?),
        endpoints: 0.5 * (fa + value_at(f, seg.b)?),
    };
    let v = values.as_array();
    // the midpoint and the segment end are rounded before f sees them
    let scale = seg.a.abs() + seg.len.abs();
    let moved = |x: f64| -> Result<f64> { Ok(derivative_at(f, x)?.abs() * 4.0 * f64::EPSILON * scale) };
    let shifts = [moved(seg.midpoint())?, 0.0, 0.5 * moved(seg.end())?];
    let mut margins = [0.0; 3];
    let mut budgets = [0.0; 3];
    let mut holds = [false; 3];
    for i in 0..3 {
        margins[i] = v[i + 1] - v[i];
        let quad = if i < 2 { mean.error } else { 0.0 };
        budgets[i] = quad + rounding(v[i]) + rounding(v[i + 1]) + shifts[i];
        holds[i] = margins[i] >= -budgets[i];
    }
    Ok(ChainReport {
        values,
        margins,
        budgets,
        holds,
        converged: mean.converged,
    })
}

/// Right-hand side of a midpoint or trapezoid theorem from endpoint
/// derivative magnitudes.
pub fn rhs_from_derivatives(theorem: Theorem, len: f64, da: f64, db: f64, params: &BoundParams) -> Result<f64> {
    let p = || params.p.expect("resolved p");
    let q = || params.q.expect("resolved q");
    let log_ok = || {
        if da > 0.0 && db > 0.0 {
            Ok(())
        } else {
            Err(Error::LogDomain(format!(
                "{theorem} needs nonzero endpoint derivatives, got |f'(a)|={da}, |f'(b)|={db}"
            )))
        }
    };
    Ok(match theorem {
        Theorem::HhChain => return Err(Error::Parameter("the chain has no single right-hand side".into())),
        Theorem::T12 => formulas::t12(len, da, db),
        Theorem::T22 => formulas::t22(len, da, db, p()),
        Theorem::T23 => formulas::t23(len, da, db),
        Theorem::T31 => formulas::t31(len, da, db),
        Theorem::T32 => formulas::t32(len, da, db, p()),
        Theorem::T33 => formulas::t33(len, da, db, p()),
        Theorem::T34 => formulas::t34(len, da, db, q()),
        Theorem::T35 => formulas::t35(len, da, db, q()),
        Theorem::Tz | Theorem::Cq | Theorem::Eq1 => {
            log_ok()?;
            formulas::tz(len, da, db)
        }
        Theorem::Tfd | Theorem::Cq1 | Theorem::Eq2 => {
            log_ok()?;
            formulas::tfd(len, da, db, p(), q())
        }
    })
}

/// Segment a theorem is stated on: `[a, a+η(b,a)]`, or `[a, b]` for the
/// classical statements.
pub fn theorem_segment(theorem: Theorem, eta: &EtaMap, a: f64, b: f64) -> Result<Segment> {
    if theorem.is_classical() || theorem.is_multivar() {
        Segment::classical(a, b)
    } else {
        Segment::new(eta, a, b)
    }
}

/// Right-hand side of `theorem` for `f` on the theorem's segment.
pub fn rhs<F: DifferentiableFunction + ?Sized>(
    theorem: Theorem,
    f: &F,
    seg: &Segment,
    params: &BoundParams,
) -> Result<f64> {
    let params = params.resolve(theorem)?;
    let da = derivative_at(f, seg.a)?.abs();
    let db = derivative_at(f, seg.b)?.abs();
    rhs_from_derivatives(theorem, seg.len, da, db, &params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Holds iff `margin ≥ −budget`; violated iff `margin < −budget − tol`.
    pub fn judge(margin: f64, budget: f64, tol: f64) -> Verdict {
        if margin >= -budget {
            Verdict::Holds
        } else if margin < -budget - tol {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub quadrature: QuadratureOptions,
    pub tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            quadrature: QuadratureOptions::default(),
            tolerance: DEFAULT_VERIFY_TOLERANCE,
        }
    }
}

/// One verified inequality instance.
///
/// For the chain theorem, `lhs`/`rhs` are the two sides of its tightest
/// link and `margin` is that link's slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEvaluation {
    pub theorem: Theorem,
    pub a: f64,
    pub b: f64,
    pub eta_ab: f64,
    pub params: BoundParams,
    pub gap: GapKind,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub error_budget: f64,
    pub verdict: Verdict,
    /// Pre-relaxation kernel every midpoint bound dominates.
    pub kernel: Option<f64>,
    pub chain: Option<ChainValues>,
    pub quadrature_converged: bool,
    pub notes: Vec<String>,
}

/// Evaluates both sides of `theorem` at `(a, b)` and judges the instance.
///
/// Class hypotheses are not checked here.
pub fn verify<F: DifferentiableFunction + ?Sized>(
    theorem: Theorem,
    f: &F,
    eta: &EtaMap,
    a: f64,
    b: f64,
    params: &BoundParams,
    options: &VerifyOptions,
) -> Result<BoundEvaluation> {
    if theorem.is_multivar() {
        return Err(Error::Parameter(format!("{theorem} is verified along an eta-path")));
    }
    let resolved = params.resolve(theorem)?;
    let seg = theorem_segment(theorem, eta, a, b)?;
    let quad = &options.quadrature;
    let mut notes: Vec<String> = theorem.as_printed_note().into_iter().map(String::from).collect();

    let (lhs, rhs_value, margin, budget, kernel, chain, converged) = match theorem.gap() {
        GapKind::Chain => {
            let report = hh_chain_check(f, &seg, quad)?;
            let k = report.tightest();
            let v = report.values.as_array();
            (
                v[k],
                v[k + 1],
                report.margins[k],
                report.budgets[k],
                None,
                Some(report.values),
                report.converged,
            )
        }
        gap => {
            let lhs = match gap {
                GapKind::Trapezoid => trapezoid_gap(f, &seg, quad)?,
                _ => midpoint_gap(f, &seg, quad)?,
            };
            let rhs_value = rhs(theorem, f, &seg, &resolved)?;
            let kernel = match gap {
                GapKind::Midpoint => Some(tight_kernel(f, &seg, quad)?),
                _ => None,
            };
            let budget = lhs.error + rounding(rhs_value) * 8.0;
            let converged = lhs.converged && kernel.is_none_or(|k| k.converged);
            (
                lhs.value,
                rhs_value,
                rhs_value - lhs.value,
                budget,
                kernel.map(|k| k.value),
                None,
                converged,
            )
        }
    };
    if !converged {
        notes.push("quadrature did not reach the requested tolerance".into());
    }
    if !(lhs.is_finite() && rhs_value.is_finite()) {
        return Err(Error::Certification(format!("{theorem}: non-finite side")));
    }
    Ok(BoundEvaluation {
        theorem,
        a,
        b,
        eta_ab: seg.len,
        params: resolved,
        gap: theorem.gap(),
        lhs,
        rhs: rhs_value,
        margin,
        error_budget: budget,
        verdict: Verdict::judge(margin, budget, options.tolerance),
        kernel,
        chain,
        quadrature_converged: converged,
        notes,
    })
}
