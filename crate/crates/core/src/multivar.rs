//! η-paths in `R^n`, the restriction `φ(t) = f(x + tη(y,x))`, its running
//! integral `Φ`, and the path versions of the log-preinvex midpoint bounds.

use serde::Serialize;

use crate::bounds::{self, BoundEvaluation, BoundParams, GapKind, Theorem, Verdict, VerifyOptions};
use crate::error::{Error, Result};
use crate::expr::{EvalError, Expression};
use crate::function::{linspace, DifferentiableFunction, Interval, RealFunction};
use crate::invex::{
    check_condition_c, classify, BoxRegion, ClassCertificate, ClassifyOptions, ConditionCReport, ConvexityClass,
    EtaMap, InvexDomain,
};
use crate::quadrature::{integrate_with, QuadratureError, QuadratureOptions};

/// Number of equal cells `Φ` is accumulated over.
pub const ACCUMULATOR_CELLS: usize = 64;

/// Variable names `z1..zn` for functions on `R^n`.
pub fn point_variables(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("z{i}")).collect()
}

/// Parses `f` as a function of `z1..zn`.
pub fn parse_function(source: &str, n: usize) -> Result<Expression> {
    let names = point_variables(n);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(Expression::parse(source, &refs)?)
}

/// The path `{x + tη(y,x) : t ∈ [0,1]}` together with `f` restricted to it.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaPath {
    f: Expression,
    eta: EtaMap,
    x: Vec<f64>,
    y: Vec<f64>,
    direction: Vec<f64>,
    end: Vec<f64>,
}

impl EtaPath {
    pub fn new(f: Expression, eta: EtaMap, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n == 0 || y.len() != n {
            return Err(Error::Parameter(format!(
                "x and y must be non-empty and of equal length, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if eta.dim() != n || f.variables().len() != n {
            return Err(Error::Parameter(format!(
                "dimension mismatch: points have {n}, eta has {}, f has {} variable(s)",
                eta.dim(),
                f.variables().len()
            )));
        }
        if x.iter().chain(&y).any(|c| !c.is_finite()) {
            return Err(Error::Parameter("points must be finite".into()));
        }
        let direction = eta
            .eval(&y, &x)
            .map_err(|e| Error::eval(format!("eta(y={y:?}, x={x:?})"), e))?;
        let end = x.iter().zip(&direction).map(|(a, d)| a + d).collect();
        Ok(EtaPath {
            f,
            eta,
            x,
            y,
            direction,
            end,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn eta(&self) -> &EtaMap {
        &self.eta
    }

    /// `η(y, x)`.
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// `v = x + η(y, x)`.
    pub fn end(&self) -> &[f64] {
        &self.end
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        self.x.iter().zip(&self.direction).map(|(a, d)| a + t * d).collect()
    }

    /// `φ(t) = f(x + tη(y,x))`.
    pub fn phi(&self, t: f64) -> Result<f64, EvalError> {
        self.f.eval(&self.point(t))
    }

    /// Fails with the first sampled `t` whose path point leaves `region`
    /// (inflated by its default tolerance).
    pub fn check_inside(&self, region: &BoxRegion, samples: usize) -> Result<()> {
        let slack = region.default_tolerance();
        for t in linspace(0.0, 1.0, samples.max(2)) {
            let p = self.point(t);
            if region.excess(&p) > slack {
                return Err(Error::DomainExit {
                    point: format!("path parameter t={t} gives {p:?}"),
                });
            }
        }
        Ok(())
    }

    /// Smallest box containing `x`, `y`, `v` and `samples` path points.
    pub fn bounding_box(&self, samples: usize) -> Result<BoxRegion> {
        let pts: Vec<Vec<f64>> = linspace(0.0, 1.0, samples.max(2))
            .into_iter()
            .map(|t| self.point(t))
            .collect();
        let mut refs: Vec<&[f64]> = vec![&self.x, &self.y, &self.end];
        refs.extend(pts.iter().map(Vec::as_slice));
        BoxRegion::bounding(&refs)
    }

    /// Log-preinvexity margin of `f` for the path points at `t1`, `t2`,
    /// computed through `η` itself:
    /// `f(z1 + λη(z2,z1)) − f(z1)^(1−λ) f(z2)^λ`.
    pub fn logpreinvex_margin(&self, t1: f64, t2: f64, lambda: f64) -> Result<f64, EvalError> {
        let z1 = self.point(t1);
        let z2 = self.point(t2);
        let e = self.eta.eval(&z2, &z1)?;
        let w: Vec<f64> = z1.iter().zip(&e).map(|(a, d)| a + lambda * d).collect();
        let (f1, f2) = (self.f.eval(&z1)?, self.f.eval(&z2)?);
        Ok(ConvexityClass::LogPreinvex.margin(self.f.eval(&w)?, f1, f2, lambda))
    }

    /// Log-convexity margin of `φ`:
    /// `φ((1−λ)t1 + λt2) − φ(t1)^(1−λ) φ(t2)^λ`.
    pub fn logconvex_margin(&self, t1: f64, t2: f64, lambda: f64) -> Result<f64, EvalError> {
        let s = (1.0 - lambda) * t1 + lambda * t2;
        Ok(ConvexityClass::LogPreinvex.margin(self.phi(s)?, self.phi(t1)?, self.phi(t2)?, lambda))
    }
}

impl RealFunction for EtaPath {
    fn value(&self, t: f64) -> Result<f64, EvalError> {
        self.phi(t)
    }
}

/// `Φ(t) = ∫_0^t φ(s) ds` on `[0, 1]`.
///
/// Cell integrals over `[k/64, (k+1)/64]` are computed once at
/// construction; `Φ(t)` adds one partial-cell integral to the prefix sum,
/// so the accumulator is immutable and can be shared between threads.
#[derive(Debug, Clone)]
pub struct PathAccumulator {
    path: EtaPath,
    prefix: Vec<f64>,
    prefix_error: Vec<f64>,
    options: QuadratureOptions,
    converged: bool,
}

impl PathAccumulator {
    pub fn new(path: &EtaPath, options: &QuadratureOptions) -> Result<Self> {
        let cell_options = QuadratureOptions {
            tolerance: options.tolerance / ACCUMULATOR_CELLS as f64,
            ..*options
        };
        let mut prefix = Vec::with_capacity(ACCUMULATOR_CELLS + 1);
        let mut prefix_error = Vec::with_capacity(ACCUMULATOR_CELLS + 1);
        prefix.push(0.0);
        prefix_error.push(0.0);
        let mut converged = true;
        for k in 0..ACCUMULATOR_CELLS {
            let (lo, hi) = cell(k);
            let r = integrate_with(|t| path.phi(t), lo, hi, &cell_options).map_err(path_error)?;
            converged &= r.converged;
            prefix.push(prefix[k] + r.value);
            prefix_error.push(prefix_error[k] + r.error);
        }
        Ok(PathAccumulator {
            path: path.clone(),
            prefix,
            prefix_error,
            options: cell_options,
            converged,
        })
    }

    pub fn path(&self) -> &EtaPath {
        &self.path
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// `Φ(t)` and an absolute error allowance.
    pub fn evaluate(&self, t: f64) -> Result<(f64, f64), EvalError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(EvalError::OutOfRange(t));
        }
        let k = ((t * ACCUMULATOR_CELLS as f64).floor() as usize).min(ACCUMULATOR_CELLS - 1);
        let (lo, _) = cell(k);
        if t == lo {
            return Ok((self.prefix[k], self.prefix_error[k]));
        }
        let r = integrate_with(|s| self.path.phi(s), lo, t, &self.options).map_err(|e| match e {
            QuadratureError::Eval { source, .. } => source,
            _ => EvalError::NonFinite,
        })?;
        Ok((self.prefix[k] + r.value, self.prefix_error[k] + r.error))
    }
}

fn cell(k: usize) -> (f64, f64) {
    let n = ACCUMULATOR_CELLS as f64;
    (k as f64 / n, (k + 1) as f64 / n)
}

fn path_error(e: QuadratureError) -> Error {
    match e {
        QuadratureError::Eval { x, source } => Error::eval(format!("path parameter t={x}"), source),
        other => other.into(),
    }
}

impl RealFunction for PathAccumulator {
    fn value(&self, t: f64) -> Result<f64, EvalError> {
        self.evaluate(t).map(|(v, _)| v)
    }
}

impl DifferentiableFunction for PathAccumulator {
    fn derivative(&self, t: f64) -> Result<f64, EvalError> {
        self.path.phi(t)
    }

    fn domain(&self) -> Option<Interval> {
        Some(Interval { lo: 0.0, hi: 1.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Condition C grid per axis; `None` picks a size from the dimension.
    pub condition_grid: Option<usize>,
    /// `(t1, t2)` grid for the log-convexity check of `φ`.
    pub points: usize,
    pub lambda_points: usize,
    pub tolerance: f64,
    /// Path samples used for the bounding box and containment.
    pub path_samples: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            condition_grid: None,
            points: 33,
            lambda_points: 17,
            tolerance: 1e-9,
            path_samples: 65,
        }
    }
}

/// Largest grid (at most 9, at least 3) keeping the `x, y` sweep of the
/// Condition C check near `2·10^4` pairs.
fn condition_grid_for(n: usize) -> usize {
    (3..=9)
        .rev()
        .find(|g| (*g as f64).powi(2 * n as i32) <= 2e4)
        .unwrap_or(3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathCertificate {
    pub condition_c: ConditionCReport,
    /// Log-convexity of `φ` on `[0, 1]`.
    pub certificate: ClassCertificate,
}

impl PathCertificate {
    pub fn certified(&self) -> bool {
        self.condition_c.pass && self.certificate.certified()
    }
}

/// Certifies `f` log-preinvex along the path through log-convexity of `φ`.
///
/// The equivalence needs Condition C, checked on the smallest box holding
/// `x`, `y`, `v` and the sampled path; if it fails the check refuses.
pub fn check_path_logpreinvex(path: &EtaPath, options: &PathOptions) -> Result<PathCertificate> {
    let region = path.bounding_box(options.path_samples)?;
    let grid = options.condition_grid.unwrap_or_else(|| condition_grid_for(path.dim()));
    let domain = InvexDomain::new(region, path.eta.clone())?;
    let condition_c = check_condition_c(&domain, grid)?;
    if !condition_c.pass {
        return Err(Error::ConditionC {
            residual: condition_c.worst_residual,
            witness: format!("{:?}", condition_c.witness),
        });
    }
    let unit = InvexDomain::interval(0.0, 1.0, EtaMap::canonical(1))?;
    let certificate = classify(
        path,
        &unit,
        ConvexityClass::LogPreinvex,
        &ClassifyOptions {
            points: options.points,
            t_points: options.lambda_points,
            tolerance: options.tolerance,
            ..ClassifyOptions::default()
        },
    )?;
    Ok(PathCertificate {
        condition_c,
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerEquivalence {
    pub q: f64,
    pub base: ClassCertificate,
    pub power: ClassCertificate,
    /// Both certified or both refuted.
    pub verdicts_agree: bool,
    /// Largest `|logmargin(φ^q) − q·logmargin(φ)|` over the grid, where
    /// `logmargin = log φ(s) − (1−λ) log φ(t1) − λ log φ(t2)`.
    pub max_log_deviation: f64,
    /// Samples where the two log margins have different signs beyond rounding.
    pub sign_mismatches: usize,
}

/// Checks on a grid that `φ` and `φ^q` are log-convex together.
pub fn check_q_power_equivalence<F: RealFunction + ?Sized>(
    phi: &F,
    q: f64,
    points: usize,
    lambda_points: usize,
    tolerance: f64,
) -> Result<PowerEquivalence> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Parameter(format!("q must be positive, got {q}")));
    }
    let positive = |t: f64| -> Result<f64> {
        let v = phi.value(t).map_err(|e| Error::eval(format!("t={t}"), e))?;
        if v <= 0.0 {
            return Err(Error::Positivity {
                at: format!("t={t}"),
                value: v,
            });
        }
        Ok(v)
    };
    let powered = |t: f64| -> Result<f64, EvalError> {
        let v = phi.value(t)?.powf(q);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    };
    let unit = InvexDomain::interval(0.0, 1.0, EtaMap::canonical(1))?;
    let options = ClassifyOptions {
        points,
        t_points: lambda_points,
        tolerance,
        ..ClassifyOptions::default()
    };
    let base = classify(phi, &unit, ConvexityClass::LogPreinvex, &options)?;
    let power = classify(&powered, &unit, ConvexityClass::LogPreinvex, &options)?;

    let ts = linspace(0.0, 1.0, points.max(2));
    let ls = linspace(0.0, 1.0, lambda_points.max(2));
    let logs: Vec<f64> = ts.iter().map(|&t| positive(t).map(f64::ln)).collect::<Result<_>>()?;
    let mut max_dev = 0.0f64;
    let mut mismatches = 0;
    for (i, &t1) in ts.iter().enumerate() {
        for (j, &t2) in ts.iter().enumerate() {
            for &l in &ls {
                let s = (1.0 - l) * t1 + l * t2;
                let ls_phi = positive(s)?.ln();
                let m1 = ls_phi - (1.0 - l) * logs[i] - l * logs[j];
                let lq = powered(s).map_err(|e| Error::eval(format!("t={s}"), e))?.ln();
                let lq1 = powered(t1).map_err(|e| Error::eval(format!("t={t1}"), e))?.ln();
                let lq2 = powered(t2).map_err(|e| Error::eval(format!("t={t2}"), e))?.ln();
                let mq = lq - (1.0 - l) * lq1 - l * lq2;
                max_dev = max_dev.max((mq - q * m1).abs());
                let noise = 64.0 * f64::EPSILON * (1.0 + q) * (1.0 + ls_phi.abs() + logs[i].abs() + logs[j].abs());
                if (m1 > noise && mq < -noise * q.max(1.0)) || (m1 < -noise && mq > noise * q.max(1.0)) {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(PowerEquivalence {
        q,
        verdicts_agree: base.certified() == power.certified(),
        base,
        power,
        max_log_deviation: max_dev,
        sign_mismatches: mismatches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultivarOptions {
    pub verify: VerifyOptions,
    pub path: PathOptions,
    /// Certify the hypothesis before verifying.
    pub certify: bool,
}

impl Default for MultivarOptions {
    fn default() -> Self {
        MultivarOptions {
            verify: VerifyOptions::default(),
            path: PathOptions::default(),
            certify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultivarEvaluation {
    pub evaluation: BoundEvaluation,
    pub phi_a: f64,
    pub phi_b: f64,
    pub path_end: Vec<f64>,
    pub certificate: Option<PathCertificate>,
}

/// `|(1/(b−a)) ∫_a^b Φ − Φ((a+b)/2)|`, computed without `Φ` as
/// `|(1/(b−a)) ∫_a^b (b−t) φ(t) dt − ∫_a^m φ|`.
pub fn path_midpoint_gap(path: &EtaPath, a: f64, b: f64, options: &QuadratureOptions) -> Result<bounds::Estimate> {
    let m = 0.5 * (a + b);
    let weighted = integrate_with(|t| Ok((b - t) * path.phi(t)?), a, b, options).map_err(path_error)?;
    let half = integrate_with(|t| path.phi(t), a, m, options).map_err(path_error)?;
    let mean_part = weighted.value / (b - a);
    let value = (mean_part - half.value).abs();
    Ok(bounds::Estimate {
        value,
        error: weighted.error / (b - a) + half.error + bounds::rounding(mean_part) + bounds::rounding(half.value),
        converged: weighted.converged && half.converged,
    })
}

/// Verifies `Eq1` or `Eq2` for `f` along the path at `0 < a < b < 1`.
pub fn verify_multivar(
    theorem: Theorem,
    path: &EtaPath,
    a: f64,
    b: f64,
    params: &BoundParams,
    options: &MultivarOptions,
) -> Result<MultivarEvaluation> {
    if !theorem.is_multivar() {
        return Err(Error::Parameter(format!("{theorem} is not a path theorem")));
    }
    if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) {
        return Err(Error::Parameter(format!("a and b must lie in (0,1), got a={a}, b={b}")));
    }
    if !(a < b) {
        return Err(Error::Parameter(format!("need a < b, got a={a}, b={b}")));
    }
    let resolved = params.resolve(theorem)?;
    let certificate = if options.certify {
        let c = check_path_logpreinvex(path, &options.path)?;
        if !c.certified() {
            return Err(Error::Certification(format!(
                "f is not log-preinvex along the path: worst margin {:e} at t1={}, t2={}, lambda={}",
                c.certificate.worst_margin, c.certificate.witness.u, c.certificate.witness.v, c.certificate.witness.t
            )));
        }
        Some(c)
    } else {
        None
    };
    let phi_at = |t: f64| -> Result<f64> {
        let v = path
            .phi(t)
            .map_err(|e| Error::eval(format!("path parameter t={t}"), e))?;
        if v <= 0.0 {
            return Err(Error::Positivity {
                at: format!("path parameter t={t}"),
                value: v,
            });
        }
        Ok(v)
    };
    let (phi_a, phi_b) = (phi_at(a)?, phi_at(b)?);
    let quad = &options.verify.quadrature;
    let lhs = path_midpoint_gap(path, a, b, quad)?;
    let rhs = bounds::rhs_from_derivatives(theorem, b - a, phi_a, phi_b, &resolved)?;
    let budget = lhs.error + 8.0 * bounds::rounding(rhs);
    let margin = rhs - lhs.value;
    let mut notes: Vec<String> = theorem.as_printed_note().into_iter().map(String::from).collect();
    if !lhs.converged {
        notes.push("quadrature did not reach the requested tolerance".into());
    }
    let evaluation = BoundEvaluation {
        theorem,
        a,
        b,
        eta_ab: b - a,
        params: resolved,
        gap: GapKind::Midpoint,
        lhs: lhs.value,
        rhs,
        margin,
        error_budget: budget,
        verdict: Verdict::judge(margin, budget, options.verify.tolerance),
        kernel: None,
        chain: None,
        quadrature_converged: lhs.converged,
        notes,
    };
    Ok(MultivarEvaluation {
        evaluation,
        phi_a,
        phi_b,
        path_end: path.end().to_vec(),
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_path() -> EtaPath {
        EtaPath::new(
            parse_function("exp(z1 + z2)", 2).unwrap(),
            EtaMap::canonical(2),
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    fn scalar_path(f: &str) -> EtaPath {
        EtaPath::new(
            parse_function(f, 1).unwrap(),
            EtaMap::canonical(1),
            vec![0.0],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn restriction_substitutes_the_path() {
        let p = exp_path();
        for t in [0.0, 0.25, 0.7, 1.0] {
            assert_relative_eq!(p.phi(t).unwrap(), (2.0 * t).exp(), max_relative = 1e-15);
        }
        assert_eq!(p.end(), &[1.0, 1.0]);
        let still = EtaPath::new(
            parse_function("exp(z1 + z2)", 2).unwrap(),
            EtaMap::parse_components(&["0", "0"]).unwrap(),
            vec![0.3, 0.1],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(still.phi(0.9).unwrap(), still.phi(0.0).unwrap());
    }

    #[test]
    fn accumulator_matches_closed_form() {
        let p = exp_path();
        let acc = PathAccumulator::new(&p, &QuadratureOptions::default()).unwrap();
        assert_eq!(acc.value(0.0).unwrap(), 0.0);
        for t in [0.013, 0.5, 0.77, 1.0] {
            let (v, err) = acc.evaluate(t).unwrap();
            let exact = ((2.0 * t).exp() - 1.0) / 2.0;
            assert!((v - exact).abs() <= err.max(1e-13), "t={t}");
        }
        assert!(acc.evaluate(1.5).is_err());
    }

    #[test]
    fn exp_path_spot_values() {
        let p = exp_path();
        let r = verify_multivar(
            Theorem::Eq1,
            &p,
            0.2,
            0.8,
            &BoundParams::none(),
            &MultivarOptions::default(),
        )
        .unwrap();
        // ∫Φ = e^{2s}/4 − s/2, Φ(s) = (e^{2s} − 1)/2
        let int_phi = |s: f64| (2.0 * s).exp() / 4.0 - s / 2.0;
        let big_phi = |s: f64| ((2.0 * s).exp() - 1.0) / 2.0;
        let lhs = ((int_phi(0.8) - int_phi(0.2)) / 0.6 - big_phi(0.5)).abs();
        assert!((r.evaluation.lhs - lhs).abs() <= 1e-12);
        assert!((lhs - 0.083_029).abs() < 1e-6);
        let rhs = 0.6 * ((0.8f64.exp() - 0.2f64.exp()) / 1.2).powi(2);
        assert_relative_eq!(r.evaluation.rhs, rhs, max_relative = 1e-13);
        assert!((rhs - 0.420_122).abs() < 1e-6);
        assert_eq!(r.evaluation.verdict, Verdict::Holds);

        let r = verify_multivar(
            Theorem::Eq2,
            &p,
            0.2,
            0.8,
            &BoundParams::pq(2.0, 2.0),
            &MultivarOptions::default(),
        )
        .unwrap();
        let (pa, pb) = (0.4f64.exp(), 1.6f64.exp());
        let rhs = 0.6 * pa.sqrt() / (2.0 * 3f64.sqrt()) * ((pb - pa) / (pb.ln() - pa.ln())).sqrt();
        assert_relative_eq!(r.evaluation.rhs, rhs, max_relative = 1e-13);
        assert_eq!(r.evaluation.verdict, Verdict::Holds);
    }

    #[test]
    fn constant_restriction_uses_the_limit() {
        let p = EtaPath::new(
            parse_function("exp(z1 + z2)", 2).unwrap(),
            EtaMap::parse_components(&["0", "0"]).unwrap(),
            vec![0.5, 0.25],
            vec![1.0, 1.0],
        )
        .unwrap();
        let r = verify_multivar(
            Theorem::Eq1,
            &p,
            0.2,
            0.8,
            &BoundParams::none(),
            &MultivarOptions::default(),
        )
        .unwrap();
        let c = 0.75f64.exp();
        assert!(r.evaluation.lhs <= 1e-14);
        assert_relative_eq!(r.evaluation.rhs, 0.6 * c / 4.0, max_relative = 1e-15);
        assert_eq!(r.evaluation.verdict, Verdict::Holds);
    }

    #[test]
    fn endpoints_must_be_interior() {
        let p = exp_path();
        let o = MultivarOptions::default();
        for (a, b) in [(0.0, 0.5), (0.5, 1.0), (0.6, 0.4)] {
            assert!(matches!(
                verify_multivar(Theorem::Eq1, &p, a, b, &BoundParams::none(), &o),
                Err(Error::Parameter(_))
            ));
        }
    }

    #[test]
    fn path_log_convexity_examples() {
        let o = PathOptions::default();
        assert!(check_path_logpreinvex(&exp_path(), &o).unwrap().certified());
        assert!(check_path_logpreinvex(&scalar_path("exp(z1^2)"), &o)
            .unwrap()
            .certified());
        let c = check_path_logpreinvex(&scalar_path("exp(-(z1^2))"), &o).unwrap();
        assert!(!c.certified(), "{c:?}");
        let w = c.certificate.witness;
        // worst margin at t1 = 0, t2 = 1, λ maximizing e^{-λ²} − e^{-λ}
        assert!(w.u.min(w.v) < 0.1 && w.u.max(w.v) > 0.9);
        let g = |l: f64| (-l * l).exp() - (-l).exp();
        let best = (0..=10_000)
            .map(|k| k as f64 / 10_000.0)
            .fold(0.0, |b: f64, l| if g(l) > g(b) { l } else { b });
        let lambda = if w.u < w.v { w.t } else { 1.0 - w.t };
        assert!((lambda - best).abs() < 0.01, "{w:?} vs {best}");
    }

    #[test]
    fn condition_c_failure_refuses() {
        let p = EtaPath::new(
            parse_function("exp(z1)", 1).unwrap(),
            EtaMap::parse_components(&["2*(v1 - u1)"]).unwrap(),
            vec![0.0],
            vec![0.4],
        )
        .unwrap();
        assert!(matches!(
            check_path_logpreinvex(&p, &PathOptions::default()),
            Err(Error::ConditionC { .. })
        ));
    }

    #[test]
    fn power_equivalence_examples() {
        let e2t = |t: f64| Ok((2.0 * t).exp());
        let r = check_q_power_equivalence(&e2t, 3.0, 17, 9, 1e-9).unwrap();
        assert!(r.base.certified() && r.power.certified() && r.verdicts_agree);
        let bump = |t: f64| Ok((-t * t).exp());
        let r = check_q_power_equivalence(&bump, 2.0, 17, 9, 1e-9).unwrap();
        assert!(!r.base.certified() && !r.power.certified());
        assert_eq!(r.sign_mismatches, 0);
        assert!(r.max_log_deviation < 1e-12);
        let r = check_q_power_equivalence(&bump, 1.0, 17, 9, 1e-9).unwrap();
        assert_eq!(r.base.worst_margin, r.power.worst_margin);
        assert_eq!(r.max_log_deviation, 0.0);
    }
}
