//! One-dimensional functions as seen by the classifier and the bounds.

use crate::error::{Error, Result};
use crate::expr::{EvalError, Expression};

/// A real function of one variable that may fail to evaluate.
pub trait RealFunction: Sync {
    fn value(&self, x: f64) -> Result<f64, EvalError>;
}

/// A real function with a known derivative.
pub trait DifferentiableFunction: RealFunction {
    fn derivative(&self, x: f64) -> Result<f64, EvalError>;

    /// Interval the function is restricted to, if any.
    fn domain(&self) -> Option<Interval> {
        None
    }
}

impl<F> RealFunction for F
where
    F: Fn(f64) -> Result<f64, EvalError> + Sync,
{
    fn value(&self, x: f64) -> Result<f64, EvalError> {
        self(x)
    }
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("[{lo}, {hi}] is not a proper interval")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    /// `n ≥ 2` equally spaced points including both endpoints exactly.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        linspace(self.lo, self.hi, n)
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let last = (n - 1) as f64;
            (0..n)
                .map(|k| {
                    if k + 1 == n {
                        hi
                    } else {
                        lo + (hi - lo) * (k as f64 / last)
                    }
                })
                .collect()
        }
    }
}

/// `f` given as an expression in one variable, with its derivative.
///
/// The derivative is symbolic unless overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunction {
    value: Expression,
    derivative: Expression,
    domain: Option<Interval>,
}

impl ScalarFunction {
    /// Parses `source` as a function of `x`.
    pub fn parse(source: &str) -> Result<Self> {
        Self::parse_in(source, "x")
    }

    pub fn parse_in(source: &str, variable: &str) -> Result<Self> {
        Self::from_expression(Expression::parse(source, &[variable])?)
    }

    pub fn from_expression(value: Expression) -> Result<Self> {
        if value.variables().len() != 1 {
            return Err(Error::Parameter(format!(
                "a scalar function needs exactly one variable, got {}",
                value.variables().len()
            )));
        }
        let derivative = value.differentiate(&value.variables()[0])?;
        Ok(ScalarFunction {
            value,
            derivative,
            domain: None,
        })
    }

    /// Replaces the symbolic derivative with a user-supplied one.
    pub fn with_derivative(mut self, source: &str) -> Result<Self> {
        let var = self.variable().to_string();
        self.derivative = Expression::parse(source, &[var.as_str()])?;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: Interval) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn variable(&self) -> &str {
        &self.value.variables()[0]
    }

    pub fn expression(&self) -> &Expression {
        &self.value
    }

    pub fn derivative_expression(&self) -> &Expression {
        &self.derivative
    }

    /// Largest scaled gap between `f'` and a central difference of `f`
    /// over `samples` interior points of `[lo, hi]`:
    /// `|f'(x) - (f(x+h) - f(x-h))/2h| / (1 + |f'(x)|)`.
    pub fn derivative_mismatch(&self, lo: f64, hi: f64, samples: usize, step: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 1..=samples {
            let x = lo + (hi - lo) * k as f64 / (samples + 1) as f64;
            let exact = self.derivative(x).map_err(|e| Error::eval(x, e))?;
            let fp = self.value(x + step).map_err(|e| Error::eval(x + step, e))?;
            let fm = self.value(x - step).map_err(|e| Error::eval(x - step, e))?;
            let fd = (fp - fm) / (2.0 * step);
            worst = worst.max((exact - fd).abs() / (1.0 + exact.abs()));
        }
        Ok(worst)
    }
}

impl RealFunction for ScalarFunction {
    fn value(&self, x: f64) -> Result<f64, EvalError> {
        self.value.eval(&[x])
    }
}

impl DifferentiableFunction for ScalarFunction {
    fn derivative(&self, x: f64) -> Result<f64, EvalError> {
        self.derivative.eval(&[x])
    }

    fn domain(&self) -> Option<Interval> {
        self.domain
    }
}

/// `|f'|^power`, the function whose class the derivative-based bounds assume.
pub struct DerivativeMagnitude<'a, F: ?Sized> {
    f: &'a F,
    power: f64,
}

impl<'a, F: DifferentiableFunction + ?Sized> DerivativeMagnitude<'a, F> {
    pub fn new(f: &'a F, power: f64) -> Self {
        DerivativeMagnitude { f, power }
    }
}

impl<F: DifferentiableFunction + ?Sized> RealFunction for DerivativeMagnitude<'_, F> {
    fn value(&self, x: f64) -> Result<f64, EvalError> {
        let d = self.f.derivative(x)?.abs();
        let v = if self.power == 1.0 { d } else { d.powf(self.power) };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}
