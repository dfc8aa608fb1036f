//! Adaptive quadrature by recursive bisection with an embedded
//! Gauss–Kronrod 7/15 pair.
//!
//! On each panel the 15-point Kronrod value is the estimate and its
//! distance from the embedded 7-point Gauss value is the error estimate.
//! Both rules integrate polynomials of degree ≤ 13 exactly, so such
//! integrands are accepted on the first panel. A panel is accepted when its
//! error estimate is below its share of the tolerance (proportional to its
//! width); otherwise it is bisected, down to `max_depth` levels.

use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_DEPTH: usize = 50;
/// Hard cap on accepted panels, so pathological integrands terminate.
pub const DEFAULT_MAX_PANELS: usize = 200_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("integrand failed at x = {x}: {source}")]
    Eval { x: f64, source: EvalError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Sum of panel error estimates plus a rounding allowance.
    pub error: f64,
    /// Number of bisections performed.
    pub subdivisions: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub tolerance: f64,
    pub max_depth: usize,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_depth: DEFAULT_MAX_DEPTH,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

impl QuadratureOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        QuadratureOptions {
            tolerance,
            ..Default::default()
        }
    }
}

struct Panel {
    kronrod: f64,
    error: f64,
    abs_sum: f64,
}

fn gauss_kronrod<G>(g: &G, lo: f64, hi: f64) -> Result<Panel, QuadratureError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |x: f64| g(x).map_err(|source| QuadratureError::Eval { x, source });

    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_sum = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Panel {
        kronrod: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        abs_sum: abs_sum * half.abs(),
    })
}

/// Integrates `g` over `[lo, hi]` to absolute tolerance `tol`.
pub fn integrate<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<QuadratureResult, QuadratureError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    integrate_with(g, lo, hi, &QuadratureOptions::with_tolerance(tol))
}

pub fn integrate_with<G>(
    g: G,
    lo: f64,
    hi: f64,
    options: &QuadratureOptions,
) -> Result<QuadratureResult, QuadratureError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(QuadratureError::InvalidInterval { lo, hi });
    }
    if !(options.tolerance > 0.0) {
        return Err(QuadratureError::InvalidTolerance(options.tolerance));
    }
    if lo == hi {
        return Ok(QuadratureResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
            evaluations: 0,
            converged: true,
        });
    }

    let mut state = State {
        value: 0.0,
        error: 0.0,
        abs_sum: 0.0,
        subdivisions: 0,
        panels: 0,
        converged: true,
    };
    let first = gauss_kronrod(&g, lo, hi)?;
    refine(&g, lo, hi, first, options.tolerance, 0, options, &mut state)?;

    let rounding = 50.0 * f64::EPSILON * state.abs_sum;
    Ok(QuadratureResult {
        value: state.value,
        error: state.error + rounding,
        subdivisions: state.subdivisions,
        evaluations: 15 * (1 + 2 * state.subdivisions),
        converged: state.converged,
    })
}

struct State {
    value: f64,
    error: f64,
    abs_sum: f64,
    subdivisions: usize,
    panels: usize,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn refine<G>(
    g: &G,
    lo: f64,
    hi: f64,
    panel: Panel,
    tol: f64,
    depth: usize,
    options: &QuadratureOptions,
    state: &mut State,
) -> Result<(), QuadratureError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    let floor = 50.0 * f64::EPSILON * panel.abs_sum;
    let mid = 0.5 * (lo + hi);
    let splittable = mid > lo && mid < hi;
    let accept = panel.error <= tol.max(floor);
    let exhausted =
        depth >= options.max_depth || !splittable || state.panels + state.subdivisions >= options.max_panels;
    if accept || exhausted {
        if !accept {
            state.converged = false;
        }
        state.value += panel.kronrod;
        state.error += panel.error;
        state.abs_sum += panel.abs_sum;
        state.panels += 1;
        return Ok(());
    }
    state.subdivisions += 1;
    let left = gauss_kronrod(g, lo, mid)?;
    let right = gauss_kronrod(g, mid, hi)?;
    refine(g, lo, mid, left, 0.5 * tol, depth + 1, options, state)?;
    refine(g, mid, hi, right, 0.5 * tol, depth + 1, options, state)
}
