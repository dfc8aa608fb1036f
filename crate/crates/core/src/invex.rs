//! η-maps, invex domains and sampled class certificates.
//!
//! Everything here is grid sampling: a passing report is evidence over the
//! sampled points, not a proof.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{EvalError, Expression};
use crate::function::{linspace, RealFunction};

/// The bifunction `η(v, u)`, scalar (`n = 1`) or vector valued.
///
/// Scalar maps are written in `u` and `v`. Vector maps of dimension `n`
/// are written in `u1..un` and `v1..vn`, one expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaMap {
    dim: usize,
    components: Vec<Expression>,
}

impl EtaMap {
    /// Scalar map in `u`, `v`.
    pub fn parse(source: &str) -> Result<Self> {
        let e = Expression::parse(source, &["u", "v"])?;
        Ok(EtaMap {
            dim: 1,
            components: vec![e],
        })
    }

    /// Vector map with one expression per component.
    pub fn parse_components<S: AsRef<str>>(sources: &[S]) -> Result<Self> {
        let n = sources.len();
        if n == 0 {
            return Err(Error::Parameter("an eta map needs at least one component".into()));
        }
        let names = vector_variables(n);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let components = sources
            .iter()
            .map(|s| Expression::parse(s.as_ref(), &refs))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(EtaMap { dim: n, components })
    }

    /// `η(v, u) = v − u`.
    pub fn canonical(dim: usize) -> Self {
        if dim == 1 {
            return EtaMap::parse("v - u").expect("canonical map parses");
        }
        let sources: Vec<String> = (1..=dim).map(|i| format!("v{i} - u{i}")).collect();
        EtaMap::parse_components(&sources).expect("canonical map parses")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The same map written in vector form: a scalar map in `u`, `v`
    /// becomes a one-component map in `u1`, `v1`.
    pub fn as_vector(&self) -> Self {
        if self.dim != 1 || self.components[0].variables()[0] == "u1" {
            return self.clone();
        }
        let e = Expression::from_node(self.components[0].root().clone(), &["u1", "v1"]).expect("renaming keeps arity");
        EtaMap {
            dim: 1,
            components: vec![e],
        }
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    /// `η(v, u)` for a scalar map.
    pub fn eval_scalar(&self, v: f64, u: f64) -> Result<f64, EvalError> {
        if self.dim != 1 {
            return Err(EvalError::PointArity {
                expected: 2 * self.dim,
                found: 2,
            });
        }
        self.components[0].eval(&[u, v])
    }

    /// `η(v, u)` written into `out`; `scratch` must hold `2n` values.
    pub fn eval_into(&self, v: &[f64], u: &[f64], scratch: &mut [f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.dim;
        if v.len() != n || u.len() != n {
            return Err(EvalError::PointArity {
                expected: 2 * n,
                found: v.len() + u.len(),
            });
        }
        scratch[..n].copy_from_slice(u);
        scratch[n..2 * n].copy_from_slice(v);
        for (slot, c) in out.iter_mut().zip(&self.components) {
            *slot = c.eval(&scratch[..2 * n])?;
        }
        Ok(())
    }

    pub fn eval(&self, v: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut scratch = vec![0.0; 2 * self.dim];
        let mut out = vec![0.0; self.dim];
        self.eval_into(v, u, &mut scratch, &mut out)?;
        Ok(out)
    }
}

impl fmt::Display for EtaMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn vector_variables(n: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("u{i}"))
        .chain((1..=n).map(|i| format!("v{i}")))
        .collect()
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxRegion {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Domain("box bounds must be non-empty and of equal length".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Domain(format!("[{a}, {b}] is not a proper interval")));
            }
        }
        Ok(BoxRegion { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        BoxRegion::new(vec![lo], vec![hi])
    }

    /// Smallest box containing all `points`, widened to a proper box where
    /// a coordinate does not vary.
    pub fn bounding(points: &[&[f64]]) -> Result<Self> {
        let n = points.first().map_or(0, |p| p.len());
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in points {
            if p.len() != n {
                return Err(Error::Domain("points of mixed dimension".into()));
            }
            for i in 0..n {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        for i in 0..n {
            if lo[i] >= hi[i] {
                let pad = 1e-3 * lo[i].abs().max(1.0);
                lo[i] -= pad;
                hi[i] += pad;
            }
        }
        BoxRegion::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Membership tolerance: `1e-12` times the diameter, floored at a few
    /// ulps of the largest coordinate so boxes far from the origin do not
    /// fail on rounding alone.
    pub fn default_tolerance(&self) -> f64 {
        let scale = self.lo.iter().chain(&self.hi).fold(0.0f64, |m, x| m.max(x.abs()));
        (1e-12 * self.diameter()).max(16.0 * f64::EPSILON * scale)
    }

    /// Largest distance by which `p` leaves the box along any axis.
    pub fn excess(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (a, b))| (a - x).max(x - b).max(0.0))
            .fold(0.0, f64::max)
    }

    fn axis_grids(&self, points: usize) -> Vec<Vec<f64>> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| linspace(*a, *b, points))
            .collect()
    }
}

/// Writes grid point number `index` (row-major, first axis slowest).
fn grid_point(axes: &[Vec<f64>], mut index: usize, out: &mut [f64]) {
    for k in (0..axes.len()).rev() {
        let m = axes[k].len();
        out[k] = axes[k][index % m];
        index /= m;
    }
}

/// A box together with its η-map and sampling defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct InvexDomain {
    region: BoxRegion,
    eta: EtaMap,
    grid: usize,
    tolerance: f64,
}

pub const DEFAULT_DOMAIN_GRID: usize = 9;

impl InvexDomain {
    pub fn new(region: BoxRegion, eta: EtaMap) -> Result<Self> {
        if region.dim() != eta.dim() {
            return Err(Error::Domain(format!(
                "box has dimension {} but eta has {}",
                region.dim(),
                eta.dim()
            )));
        }
        let tolerance = region.default_tolerance();
        Ok(InvexDomain {
            region,
            eta,
            grid: DEFAULT_DOMAIN_GRID,
            tolerance,
        })
    }

    pub fn interval(lo: f64, hi: f64, eta: EtaMap) -> Result<Self> {
        InvexDomain::new(BoxRegion::interval(lo, hi)?, eta)
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn eta(&self) -> &EtaMap {
        &self.eta
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Checks `u + tη(v,u)` stays in the inflated box for grid `u`, `v`
    /// and `t_points` values of `t`.
    pub fn check_closure(&self, t_points: usize) -> Result<ClosureReport> {
        let n = self.region.dim();
        let axes = self.region.axis_grids(self.grid);
        let cells = self.grid.pow(n as u32);
        let ts = linspace(0.0, 1.0, t_points.max(2));
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut e = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut scratch = vec![0.0; 2 * n];
        let mut worst = 0.0f64;
        let mut witness = None;
        for i in 0..cells {
            grid_point(&axes, i, &mut u);
            for j in 0..cells {
                grid_point(&axes, j, &mut v);
                self.eta
                    .eval_into(&v, &u, &mut scratch, &mut e)
                    .map_err(|err| Error::eval(format!("v={v:?}, u={u:?}"), err))?;
                for &t in &ts {
                    for k in 0..n {
                        w[k] = u[k] + t * e[k];
                    }
                    let excess = self.region.excess(&w);
                    if excess > worst {
                        worst = excess;
                        witness = Some(ClosureWitness {
                            u: u.clone(),
                            v: v.clone(),
                            t,
                        });
                    }
                }
            }
        }
        Ok(ClosureReport {
            pass: worst <= self.tolerance,
            worst_excess: worst,
            tolerance: self.tolerance,
            witness,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureWitness {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub pass: bool,
    pub worst_excess: f64,
    pub tolerance: f64,
    pub witness: Option<ClosureWitness>,
}

/// Which of the Condition C identities a residual belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionCIdentity {
    /// `η(y, y + tη(x,y)) = −tη(x,y)`
    Backward,
    /// `η(x, y + tη(x,y)) = (1−t)η(x,y)`
    Forward,
    /// `η(y + t2η(x,y), y + t1η(x,y)) = (t2−t1)η(x,y)`
    Chord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub identity: ConditionCIdentity,
    pub t: f64,
    /// Second parameter, only for the chord identity.
    pub t2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCReport {
    pub pass: bool,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub grid: usize,
    pub witness: Option<ConditionCWitness>,
}

/// The two Condition C residuals at one scalar point.
pub fn condition_c_residuals(eta: &EtaMap, x: f64, y: f64, t: f64) -> Result<(f64, f64), EvalError> {
    let e = eta.eval_scalar(x, y)?;
    let z = y + t * e;
    let r1 = eta.eval_scalar(y, z)? + t * e;
    let r2 = eta.eval_scalar(x, z)? - (1.0 - t) * e;
    Ok((r1, r2))
}

struct Worst<W> {
    value: f64,
    witness: Option<W>,
}

impl<W> Worst<W> {
    fn none() -> Self {
        Worst {
            value: f64::NEG_INFINITY,
            witness: None,
        }
    }

    /// Strictly larger wins, so the earliest point in scan order is kept on ties.
    fn offer(&mut self, value: f64, witness: impl FnOnce() -> W) {
        if value > self.value {
            self.value = value;
            self.witness = Some(witness());
        }
    }

    fn merge(&mut self, later: Worst<W>) {
        if later.value > self.value {
            *self = later;
        }
    }
}

/// Samples both Condition C identities and the chord identity over a grid
/// of `grid` points per axis for `x`, `y` and each `t`.
///
/// Passes iff every residual (max-norm for vector maps) is within the
/// domain tolerance.
pub fn check_condition_c(domain: &InvexDomain, grid: usize) -> Result<ConditionCReport> {
    if grid < 3 {
        return Err(Error::Parameter(format!(
            "condition C grid must be at least 3, got {grid}"
        )));
    }
    let eta = &domain.eta;
    let n = domain.region.dim();
    let axes = domain.region.axis_grids(grid);
    let cells = grid.pow(n as u32);
    let ts = linspace(0.0, 1.0, grid);

    let rows: Vec<Result<Worst<ConditionCWitness>>> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            let mut e = vec![0.0; n];
            let mut z = vec![0.0; n];
            let mut z2 = vec![0.0; n];
            let mut r = vec![0.0; n];
            let mut scratch = vec![0.0; 2 * n];
            let mut worst = Worst::none();
            grid_point(&axes, i, &mut x);
            let fail =
                |what: &str, x: &[f64], y: &[f64], err| Error::eval(format!("{what} with x={x:?}, y={y:?}"), err);
            for j in 0..cells {
                grid_point(&axes, j, &mut y);
                eta.eval_into(&x, &y, &mut scratch, &mut e)
                    .map_err(|err| fail("eta(x,y)", &x, &y, err))?;
                for identity in [ConditionCIdentity::Backward, ConditionCIdentity::Forward] {
                    for &t in &ts {
                        for k in 0..n {
                            z[k] = y[k] + t * e[k];
                        }
                        let (from, coeff) = match identity {
                            ConditionCIdentity::Backward => (&y, -t),
                            _ => (&x, 1.0 - t),
                        };
                        eta.eval_into(from, &z, &mut scratch, &mut r)
                            .map_err(|err| fail("condition C", &x, &y, err))?;
                        let res = max_residual(&r, &e, coeff);
                        worst.offer(res, || ConditionCWitness {
                            x: x.clone(),
                            y: y.clone(),
                            identity,
                            t,
                            t2: None,
                        });
                    }
                }
                for &t1 in &ts {
                    for k in 0..n {
                        z[k] = y[k] + t1 * e[k];
                    }
                    for &t2 in &ts {
                        for k in 0..n {
                            z2[k] = y[k] + t2 * e[k];
                        }
                        eta.eval_into(&z2, &z, &mut scratch, &mut r)
                            .map_err(|err| fail("chord identity", &x, &y, err))?;
                        let res = max_residual(&r, &e, t2 - t1);
                        worst.offer(res, || ConditionCWitness {
                            x: x.clone(),
                            y: y.clone(),
                            identity: ConditionCIdentity::Chord,
                            t: t1,
                            t2: Some(t2),
                        });
                    }
                }
            }
            Ok(worst)
        })
        .collect();

    let mut worst = Worst::none();
    for row in rows {
        worst.merge(row?);
    }
    Ok(ConditionCReport {
        pass: worst.value <= domain.tolerance,
        worst_residual: worst.value,
        tolerance: domain.tolerance,
        grid,
        witness: worst.witness,
    })
}

/// `max_k |r_k − coeff·e_k|`.
fn max_residual(r: &[f64], e: &[f64], coeff: f64) -> f64 {
    r.iter().zip(e).map(|(a, b)| (a - coeff * b).abs()).fold(0.0, f64::max)
}

/// The three generalized convexity classes, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvexityClass {
    Prequasiinvex,
    Preinvex,
    LogPreinvex,
}

impl ConvexityClass {
    pub const ALL: [ConvexityClass; 3] = [
        ConvexityClass::Prequasiinvex,
        ConvexityClass::Preinvex,
        ConvexityClass::LogPreinvex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConvexityClass::Prequasiinvex => "prequasiinvex",
            ConvexityClass::Preinvex => "preinvex",
            ConvexityClass::LogPreinvex => "log-preinvex",
        }
    }

    /// Signed violation of the defining inequality at one sample, divided
    /// by `max(1, |f(u)|, |f(v)|)`: positive means the inequality fails.
    pub fn margin(self, f_point: f64, f_u: f64, f_v: f64, t: f64) -> f64 {
        let raw = match self {
            ConvexityClass::Prequasiinvex => f_point - f_u.max(f_v),
            ConvexityClass::Preinvex => f_point - ((1.0 - t) * f_u + t * f_v),
            ConvexityClass::LogPreinvex => f_point - f_u.powf(1.0 - t) * f_v.powf(t),
        };
        raw / f_u.abs().max(f_v.abs()).max(1.0)
    }

    fn needs_positive(self) -> bool {
        self == ConvexityClass::LogPreinvex
    }
}

impl fmt::Display for ConvexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConvexityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "prequasiinvex" => Ok(ConvexityClass::Prequasiinvex),
            "preinvex" => Ok(ConvexityClass::Preinvex),
            "log-preinvex" | "logpreinvex" => Ok(ConvexityClass::LogPreinvex),
            _ => Err(Error::Parameter(format!("unknown class `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Grid points for each of `u` and `v`.
    pub points: usize,
    pub t_points: usize,
    pub tolerance: f64,
    /// Zoom rounds around the coarse worst cell.
    pub refine_rounds: usize,
    /// Points per axis in each zoom round.
    pub refine_points: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            points: 64,
            t_points: 33,
            tolerance: 1e-9,
            refine_rounds: 2,
            refine_points: 21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassWitness {
    pub u: f64,
    pub v: f64,
    pub t: f64,
    /// `u + tη(v,u)`.
    pub point: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCertificate {
    pub label: &'static str,
    pub target: ConvexityClass,
    /// `target` when certified, otherwise none.
    #[serde(serialize_with = "class_or_none")]
    pub class: Option<ConvexityClass>,
    pub points: usize,
    pub t_points: usize,
    pub tolerance: f64,
    /// Worst margin on the coarse grid.
    pub grid_margin: f64,
    /// Worst margin after refinement (never below `grid_margin`).
    pub worst_margin: f64,
    pub witness: ClassWitness,
    pub evaluations: usize,
}

fn class_or_none<S: Serializer>(c: &Option<ConvexityClass>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(c.map_or("none", ConvexityClass::name))
}

impl ClassCertificate {
    pub fn certified(&self) -> bool {
        self.class.is_some()
    }
}

/// Samples the defining inequality of `target` over `u, v` on a grid of
/// the domain interval and `t ∈ [0, 1]`, then zooms in on the worst cell.
///
/// The certificate claims `target` iff the worst margin is at most the
/// tolerance; otherwise the witness violates the `target` inequality.
pub fn classify<F: RealFunction + ?Sized>(
    f: &F,
    domain: &InvexDomain,
    target: ConvexityClass,
    options: &ClassifyOptions,
) -> Result<ClassCertificate> {
    if domain.region.dim() != 1 {
        return Err(Error::Domain("classification needs a one-dimensional domain".into()));
    }
    if options.points < 2 || options.t_points < 2 {
        return Err(Error::Parameter("classification grids need at least 2 points".into()));
    }
    let (lo, hi) = (domain.region.lo[0], domain.region.hi[0]);
    let slack = domain.tolerance;
    let eta = &domain.eta;
    let xs = linspace(lo, hi, options.points);
    let ts = linspace(0.0, 1.0, options.t_points);

    let value = |x: f64| -> Result<f64> {
        let y = f.value(x).map_err(|e| Error::eval(format!("x={x}"), e))?;
        if target.needs_positive() && y <= 0.0 {
            return Err(Error::Positivity {
                at: format!("x={x}"),
                value: y,
            });
        }
        Ok(y)
    };
    let fx: Vec<f64> = xs.iter().map(|&x| value(x)).collect::<Result<_>>()?;

    let rows: Vec<Result<Worst<(usize, usize, usize)>>> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut worst = Worst::none();
            let u = xs[i];
            for (j, &v) in xs.iter().enumerate() {
                let e = eta
                    .eval_scalar(v, u)
                    .map_err(|err| Error::eval(format!("eta(v={v}, u={u})"), err))?;
                for (k, &t) in ts.iter().enumerate() {
                    let w = u + t * e;
                    if !domain.region.contains_scalar(w, slack) {
                        return Err(Error::DomainExit {
                            point: format!("u={u}, v={v}, t={t} gives {w}"),
                        });
                    }
                    let m = target.margin(value(w)?, fx[i], fx[j], t);
                    worst.offer(m, || (i, j, k));
                }
            }
            Ok(worst)
        })
        .collect();
    let mut coarse = Worst::none();
    for row in rows {
        coarse.merge(row?);
    }
    let (i, j, k) = coarse.witness.expect("non-empty grid");
    let grid_margin = coarse.value;
    let mut evaluations = xs.len() + xs.len() * xs.len() * ts.len();

    let mut best = ClassWitness {
        u: xs[i],
        v: xs[j],
        t: ts[k],
        point: 0.0,
        margin: grid_margin,
    };
    best.point = best.u + best.t * eta.eval_scalar(best.v, best.u).unwrap_or(f64::NAN);

    let mut half_x = (hi - lo) / (options.points - 1) as f64;
    let mut half_t = 1.0 / (options.t_points - 1) as f64;
    for _ in 0..options.refine_rounds {
        let us = zoom(best.u, half_x, lo, hi, options.refine_points);
        let vs = zoom(best.v, half_x, lo, hi, options.refine_points);
        let tz = zoom(best.t, half_t, 0.0, 1.0, options.refine_points);
        let mut round = Worst::none();
        for &u in &us {
            let Some(fu) = f.value(u).ok().filter(|y| !target.needs_positive() || *y > 0.0) else {
                continue;
            };
            for &v in &vs {
                let Some(fv) = f.value(v).ok().filter(|y| !target.needs_positive() || *y > 0.0) else {
                    continue;
                };
                let Ok(e) = eta.eval_scalar(v, u) else {
                    continue;
                };
                for &t in &tz {
                    let w = u + t * e;
                    if !domain.region.contains_scalar(w, slack) {
                        continue;
                    }
                    let Some(fw) = f.value(w).ok().filter(|y| !target.needs_positive() || *y > 0.0) else {
                        continue;
                    };
                    let m = target.margin(fw, fu, fv, t);
                    round.offer(m, || ClassWitness {
                        u,
                        v,
                        t,
                        point: w,
                        margin: m,
                    });
                }
            }
        }
        evaluations += us.len() * (1 + vs.len() * (1 + tz.len()));
        if let Some(w) = round.witness {
            if w.margin > best.margin {
                best = w;
            }
        }
        half_x /= 10.0;
        half_t /= 10.0;
    }

    let class = (best.margin <= options.tolerance).then_some(target);
    Ok(ClassCertificate {
        label: "sampled certificate",
        target,
        class,
        points: options.points,
        t_points: options.t_points,
        tolerance: options.tolerance,
        grid_margin,
        worst_margin: best.margin,
        witness: best,
        evaluations,
    })
}

fn zoom(center: f64, half: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let a = (center - half).max(lo);
    let b = (center + half).min(hi);
    if a >= b {
        return vec![center];
    }
    linspace(a, b, n.max(2))
}

impl BoxRegion {
    fn contains_scalar(&self, x: f64, slack: f64) -> bool {
        x >= self.lo[0] - slack && x <= self.hi[0] + slack
    }
}

/// Worst margin of `class` along the single segment from `u` towards
/// `u + η(v,u)`, sampled at `t_points` values of `t`.
pub fn pair_margin<F: RealFunction + ?Sized>(
    f: &F,
    eta: &EtaMap,
    u: f64,
    v: f64,
    class: ConvexityClass,
    t_points: usize,
) -> Result<(f64, f64)> {
    let e = eta
        .eval_scalar(v, u)
        .map_err(|err| Error::eval(format!("eta(v={v}, u={u})"), err))?;
    let fu = f.value(u).map_err(|err| Error::eval(format!("x={u}"), err))?;
    let fv = f.value(v).map_err(|err| Error::eval(format!("x={v}"), err))?;
    if class.needs_positive() && (fu <= 0.0 || fv <= 0.0) {
        return Err(Error::Positivity {
            at: format!("u={u}, v={v}"),
            value: fu.min(fv),
        });
    }
    let mut worst = Worst::none();
    for t in linspace(0.0, 1.0, t_points.max(2)) {
        let w = u + t * e;
        let fw = f.value(w).map_err(|err| Error::eval(format!("x={w}"), err))?;
        worst.offer(class.margin(fw, fu, fv, t), || t);
    }
    Ok((worst.value, worst.witness.unwrap_or(0.0)))
}

/// The three bounds of the class chain at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainMeans {
    /// `f(u)^(1−t) f(v)^t`
    pub geometric: f64,
    /// `(1−t) f(u) + t f(v)`
    pub arithmetic: f64,
    /// `max{f(u), f(v)}`
    pub maximum: f64,
}

pub fn chain_means(f_u: f64, f_v: f64, t: f64) -> ChainMeans {
    ChainMeans {
        geometric: f_u.powf(1.0 - t) * f_v.powf(t),
        arithmetic: (1.0 - t) * f_u + t * f_v,
        maximum: f_u.max(f_v),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub pass: bool,
    /// Smallest `arithmetic − geometric` seen.
    pub worst_lower_slack: f64,
    /// Smallest `maximum − arithmetic` seen.
    pub worst_upper_slack: f64,
    /// Sample `(u, v, t)` with the smallest slack of either kind.
    pub witness: (f64, f64, f64),
}

/// Checks `geometric ≤ arithmetic ≤ maximum` at every grid sample, allowing
/// a few ulps of the values involved.
pub fn class_chain_check<F: RealFunction + ?Sized>(
    f: &F,
    domain: &InvexDomain,
    points: usize,
    t_points: usize,
) -> Result<ChainReport> {
    if domain.region.dim() != 1 {
        return Err(Error::Domain("the chain check needs a one-dimensional domain".into()));
    }
    let xs = linspace(domain.region.lo[0], domain.region.hi[0], points.max(2));
    let ts = linspace(0.0, 1.0, t_points.max(2));
    let fx: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let y = f.value(x).map_err(|e| Error::eval(format!("x={x}"), e))?;
            if y <= 0.0 {
                return Err(Error::Positivity {
                    at: format!("x={x}"),
                    value: y,
                });
            }
            Ok(y)
        })
        .collect::<Result<_>>()?;
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut worst = f64::INFINITY;
    let mut witness = (xs[0], xs[0], 0.0);
    let mut pass = true;
    for (i, &u) in xs.iter().enumerate() {
        for (j, &v) in xs.iter().enumerate() {
            for &t in &ts {
                let m = chain_means(fx[i], fx[j], t);
                let allowance = 4.0 * f64::EPSILON * m.maximum;
                let lo_slack = m.arithmetic - m.geometric;
                let hi_slack = m.maximum - m.arithmetic;
                lower = lower.min(lo_slack);
                upper = upper.min(hi_slack);
                if lo_slack.min(hi_slack) < worst {
                    worst = lo_slack.min(hi_slack);
                    witness = (u, v, t);
                }
                pass &= lo_slack >= -allowance && hi_slack >= -allowance;
            }
        }
    }
    Ok(ChainReport {
        pass,
        worst_lower_slack: lower,
        worst_upper_slack: upper,
        witness,
    })
}
