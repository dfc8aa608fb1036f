//! Seeded randomized campaigns: sample functions from families, certify
//! each theorem's hypothesis, verify the bound and mine for violations.
//!
//! Every trial draws from its own ChaCha8 stream selected by the trial
//! index, so a report depends only on the config and the index.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, formulas, verify, BoundEvaluation, BoundParams, Theorem, Verdict, VerifyOptions};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::function::{DerivativeMagnitude, DifferentiableFunction, Interval, RealFunction, ScalarFunction};
use crate::invex::{classify, pair_margin, ClassifyOptions, ConvexityClass, EtaMap, InvexDomain};
use crate::multivar::{check_path_logpreinvex, verify_multivar, EtaPath, MultivarOptions, PathOptions};
use crate::quadrature::QuadratureOptions;

pub const DEFAULT_P_VALUES: [f64; 6] = [1.1, 1.5, 2.0, 3.0, 5.0, 10.0];
pub const DEFAULT_Q_VALUES: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0];

pub const HISTOGRAM_BINS: usize = 64;
pub const HISTOGRAM_LO: f64 = 1e-12;
pub const HISTOGRAM_HI: f64 = 1e3;

/// Rejections allowed when drawing `(a, b)` before a trial is skipped.
pub const MAX_REJECTIONS: usize = 100;

pub const DESCENT_STEPS: usize = 100;
pub const DESCENT_DECAY: f64 = 0.5;

fn default_p_values() -> Vec<f64> {
    DEFAULT_P_VALUES.to_vec()
}

fn default_q_values() -> Vec<f64> {
    DEFAULT_Q_VALUES.to_vec()
}

fn default_eta() -> String {
    "v - u".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Class certificates.
    pub class: f64,
    /// Allowance beyond the error budget before a bound counts as violated.
    pub verify: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            class: 1e-9,
            verify: bounds::DEFAULT_VERIFY_TOLERANCE,
            quadrature: crate::quadrature::DEFAULT_TOLERANCE,
        }
    }
}

/// Sampling grids of the per-trial class certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub t_points: usize,
    /// `t` samples of the check along the trial's own `(a, b)`.
    pub pair_t_points: usize,
    pub refine_rounds: usize,
    pub refine_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 16,
            t_points: 9,
            pair_t_points: 65,
            refine_rounds: 2,
            refine_points: 7,
        }
    }
}

/// Campaign description as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub families: Vec<String>,
    pub theorems: Vec<String>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    #[serde(default = "default_q_values")]
    pub q_values: Vec<f64>,
    pub domain: DomainSpec,
    #[serde(default = "default_eta")]
    pub eta: String,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: GridSpec,
    /// Fixed `(a, b)` for every trial instead of sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<IntervalSpec>,
}

/// Function families the sampler draws from.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Affine part plus weighted even powers `w (x − s)^(2k)`.
    PolyConvex,
    /// `exp(αx + β)`.
    ExpAffine,
    /// `exp(β + αx + γ(x − c)²)` with `|g'|² ≥ 2γ` on the domain, which
    /// makes `|f'|` log-convex.
    ExpConvex,
    /// `c|x − s| + mx + d`.
    AbsKink,
    Custom(String),
}

impl Family {
    pub fn id(&self) -> String {
        match self {
            Family::PolyConvex => "poly-convex".into(),
            Family::ExpAffine => "exp-affine".into(),
            Family::ExpConvex => "exp-convex".into(),
            Family::AbsKink => "abs-kink".into(),
            Family::Custom(src) => format!("custom:{src}"),
        }
    }

    /// Members are strictly positive.
    pub fn positive(&self) -> bool {
        matches!(self, Family::ExpAffine | Family::ExpConvex)
    }

    /// Draws one member: its source in `x` and the coefficients used.
    pub fn sample<R: Rng>(&self, rng: &mut R, domain: Interval) -> (String, Vec<f64>) {
        let sign = |rng: &mut R| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match self {
            Family::PolyConvex => {
                let c0 = rng.gen_range(-1.0..1.0);
                let c1 = rng.gen_range(-1.0..1.0);
                let mut src = format!("{} + {}*x", num(c0), num(c1));
                let mut coefficients = vec![c0, c1];
                for _ in 0..rng.gen_range(1..=3) {
                    let w = rng.gen_range(0.1..2.0);
                    let s = rng.gen_range(domain.lo..domain.hi);
                    let k = rng.gen_range(1..=3u32);
                    src.push_str(&format!(" + {}*(x - {})^{}", num(w), num(s), 2 * k));
                    coefficients.extend([w, s, f64::from(2 * k)]);
                }
                (src, coefficients)
            }
            Family::ExpAffine => {
                let alpha = sign(rng) * rng.gen_range(0.1..2.0);
                let beta = rng.gen_range(-1.0..1.0);
                (format!("exp({}*x + {})", num(alpha), num(beta)), vec![alpha, beta])
            }
            Family::ExpConvex => {
                let gamma = rng.gen_range(0.05..0.5);
                let c = 0.5 * (domain.lo + domain.hi);
                let alpha = sign(rng) * (gamma * domain.width() + (2.0 * gamma).sqrt() + rng.gen_range(0.1..1.0));
                let beta = rng.gen_range(-1.0..1.0);
                let src = format!(
                    "exp({} + {}*x + {}*(x - {})^2)",
                    num(beta),
                    num(alpha),
                    num(gamma),
                    num(c)
                );
                (src, vec![beta, alpha, gamma, c])
            }
            Family::AbsKink => {
                let c = rng.gen_range(0.1..2.0);
                let s = rng.gen_range(domain.lo..domain.hi);
                let m = rng.gen_range(-1.0..1.0);
                let d = rng.gen_range(-1.0..1.0);
                let src = format!("{}*abs(x - {}) + {}*x + {}", num(c), num(s), num(m), num(d));
                (src, vec![c, s, m, d])
            }
            Family::Custom(src) => (src.clone(), Vec::new()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(src) = s.strip_prefix("custom:") {
            ScalarFunction::parse(src)?;
            return Ok(Family::Custom(src.trim().to_string()));
        }
        match s {
            "poly-convex" => Ok(Family::PolyConvex),
            "exp-affine" => Ok(Family::ExpAffine),
            "exp-convex" => Ok(Family::ExpConvex),
            "abs-kink" => Ok(Family::AbsKink),
            _ => Err(Error::Parameter(format!("unknown family `{s}`"))),
        }
    }
}

/// Literal that parses back to the same value.
fn num(x: f64) -> String {
    if x < 0.0 {
        format!("({x})")
    } else {
        format!("{x}")
    }
}

/// Why an evaluation did not end as a plain pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureClass {
    /// The hypothesis was not certified or the instance is outside the
    /// theorem's scope; no claim is made.
    PreconditionUnmet,
    NumericalInconclusive,
    /// Confirmed violation of a statement evaluated as printed.
    PaperAsPrintedViolation,
    /// Confirmed violation of a proven bound: an implementation defect.
    UnexplainedViolation,
}

impl FailureClass {
    pub fn name(self) -> &'static str {
        match self {
            FailureClass::PreconditionUnmet => "precondition-unmet",
            FailureClass::NumericalInconclusive => "numerical-inconclusive",
            FailureClass::PaperAsPrintedViolation => "paper-as-printed-violation",
            FailureClass::UnexplainedViolation => "unexplained-violation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Holds,
    Violated,
    Inconclusive,
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
            Status::Skipped => "skipped",
        }
    }
}

/// One sampled instance, reproducible from the config and trial index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub trial: u64,
    pub family: String,
    pub function: String,
    pub coefficients: Vec<f64>,
    pub p: f64,
    pub q: f64,
    /// `None` when no admissible pair was found.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub rejections: usize,
    /// Path parameters `0 < s_a < s_b < 1` for the path theorems.
    pub path: Option<(f64, f64)>,
}

/// Outcome of certifying one hypothesis for one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// `f`, `|f'|`, `|f'|^s`, or `f along path`.
    pub subject: String,
    pub class: ConvexityClass,
    pub eta: String,
    pub certified: bool,
    /// Worst margin over the domain grid.
    pub grid_margin: Option<f64>,
    /// Worst margin along the trial's own `(a, b)`.
    pub pair_margin: Option<f64>,
    pub reason: Option<String>,
}

/// Re-evaluation at ten times tighter quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub error_budget: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialEvaluation {
    pub theorem: Theorem,
    pub params: BoundParams,
    pub status: Status,
    pub classification: Option<FailureClass>,
    pub reason: Option<String>,
    pub evaluation: Option<BoundEvaluation>,
    pub recheck: Option<Recheck>,
    /// Whether the gap stays below the tight kernel; attached to violations.
    pub kernel_dominates: Option<bool>,
}

/// Both relaxation steps of the power-sum bounds at one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationCheck {
    pub t32: f64,
    pub t33: f64,
    pub t34: f64,
    pub t35: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub trial: u64,
    pub instance: Instance,
    pub eta: String,
    pub certificates: Vec<HypothesisCheck>,
    pub evaluations: Vec<TrialEvaluation>,
    pub relaxation: Option<RelaxationCheck>,
}

/// Margin counts on log-spaced bins over `[HISTOGRAM_LO, HISTOGRAM_HI]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Margins below `lo`, including non-positive ones.
    pub below: u64,
    pub above: u64,
}

impl Default for MarginHistogram {
    fn default() -> Self {
        MarginHistogram {
            lo: HISTOGRAM_LO,
            hi: HISTOGRAM_HI,
            counts: vec![0; HISTOGRAM_BINS],
            below: 0,
            above: 0,
        }
    }
}

impl MarginHistogram {
    pub fn bin(&self, margin: f64) -> Option<usize> {
        if !(margin >= self.lo && margin <= self.hi) {
            return None;
        }
        let span = self.hi.log10() - self.lo.log10();
        let k = ((margin.log10() - self.lo.log10()) / span * self.counts.len() as f64).floor();
        Some((k.max(0.0) as usize).min(self.counts.len() - 1))
    }

    pub fn add(&mut self, margin: f64) {
        match self.bin(margin) {
            Some(k) => self.counts[k] += 1,
            None if margin > self.hi => self.above += 1,
            None => self.below += 1,
        }
    }

    pub fn merge(&mut self, other: &MarginHistogram) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.below += other.below;
        self.above += other.above;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TheoremSummary {
    pub holds: u64,
    pub violated: u64,
    pub inconclusive: u64,
    pub skipped: u64,
    /// Over evaluated instances only.
    pub min_margin: Option<f64>,
    pub min_margin_trial: Option<u64>,
    pub histogram: MarginHistogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RelaxationSummary {
    pub checked: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub seed: u64,
    pub trials: u64,
    pub evaluations: u64,
    /// Confirmed violations of any kind.
    pub violations: u64,
    pub unexplained_violations: u64,
    pub classifications: BTreeMap<String, u64>,
    pub per_theorem: BTreeMap<String, TheoremSummary>,
    pub relaxation: RelaxationSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignResult {
    pub reports: Vec<TrialReport>,
    pub summary: CampaignSummary,
}

/// A violation that survived descent and the soundness gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfirmedViolation {
    pub trial: u64,
    pub theorem: Theorem,
    pub family: String,
    pub function: String,
    pub a: f64,
    pub b: f64,
    pub path: Option<(f64, f64)>,
    pub classification: FailureClass,
    pub evaluation: BoundEvaluation,
    pub recheck: Recheck,
    pub kernel: Option<f64>,
    pub kernel_dominates: Option<bool>,
    pub descent_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub result: CampaignResult,
    pub violations: Vec<ConfirmedViolation>,
}

/// A validated campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    config: CampaignConfig,
    families: Vec<Family>,
    theorems: Vec<Theorem>,
    eta: EtaMap,
    domain: Interval,
    classify: ClassifyOptions,
    verify: VerifyOptions,
    tight: VerifyOptions,
}

impl Campaign {
    pub fn new(config: CampaignConfig) -> Result<Self> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if config.families.is_empty() {
            return bad("at least one family is required".into());
        }
        if config.theorems.is_empty() {
            return bad("at least one theorem is required".into());
        }
        let families = config
            .families
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Family>>>()?;
        let mut theorems = Vec::new();
        for s in &config.theorems {
            let t: Theorem = s.parse()?;
            if theorems.contains(&t) {
                return bad(format!("theorem {t} listed twice"));
            }
            theorems.push(t);
        }
        if config.p_values.is_empty() || config.q_values.is_empty() {
            return bad("p_values and q_values must be non-empty".into());
        }
        if let Some(p) = config.p_values.iter().find(|p| !(p.is_finite() && **p > 1.0)) {
            return bad(format!("p must exceed 1, got {p}"));
        }
        if let Some(q) = config.q_values.iter().find(|q| !(q.is_finite() && **q >= 1.0)) {
            return bad(format!("q must be at least 1, got {q}"));
        }
        let tol = config.tolerances;
        for (name, v) in [
            ("class", tol.class),
            ("verify", tol.verify),
            ("quadrature", tol.quadrature),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("tolerance `{name}` must be positive, got {v}"));
            }
        }
        let g = config.grid;
        if g.points < 2 || g.t_points < 2 || g.pair_t_points < 2 || g.refine_points < 2 {
            return bad("grids need at least 2 points per axis".into());
        }
        let domain = Interval::new(config.domain.lo, config.domain.hi)?;
        let eta = EtaMap::parse(&config.eta)?;
        let closure = InvexDomain::interval(domain.lo, domain.hi, eta.clone())?.check_closure(g.t_points)?;
        if !closure.pass {
            return Err(Error::Domain(format!(
                "the domain is not invex for eta = {}: excess {:e}",
                config.eta, closure.worst_excess
            )));
        }
        let campaign = Campaign {
            families,
            theorems,
            eta,
            domain,
            classify: ClassifyOptions {
                points: g.points,
                t_points: g.t_points,
                tolerance: tol.class,
                refine_rounds: g.refine_rounds,
                refine_points: g.refine_points,
            },
            verify: VerifyOptions {
                quadrature: QuadratureOptions {
                    tolerance: tol.quadrature,
                    ..QuadratureOptions::default()
                },
                tolerance: tol.verify,
            },
            tight: VerifyOptions {
                quadrature: QuadratureOptions {
                    tolerance: tol.quadrature / 10.0,
                    ..QuadratureOptions::default()
                },
                tolerance: tol.verify,
            },
            config,
        };
        if let Some(IntervalSpec { a, b }) = campaign.config.interval {
            if !campaign.admissible(a, b) {
                return bad(format!("fixed interval a={a}, b={b} is not admissible"));
            }
        }
        Ok(campaign)
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn theorems(&self) -> &[Theorem] {
        &self.theorems
    }

    fn needs_ordered_pair(&self) -> bool {
        self.theorems.iter().any(|t| t.is_classical())
    }

    /// `a, b` in the domain with `η(b,a) > 0`, and `a < b` when a
    /// classical statement is selected.
    fn admissible(&self, a: f64, b: f64) -> bool {
        if !(self.domain.contains(a, 0.0) && self.domain.contains(b, 0.0)) {
            return false;
        }
        if self.needs_ordered_pair() && !(a < b) {
            return false;
        }
        matches!(self.eta.eval_scalar(b, a), Ok(e) if e > 0.0 && e.is_finite())
    }

    fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(trial);
        rng
    }

    pub fn instance(&self, trial: u64) -> Instance {
        let mut rng = self.rng(trial);
        let family = &self.families[(trial % self.families.len() as u64) as usize];
        let (function, coefficients) = family.sample(&mut rng, self.domain);
        let p = self.config.p_values[rng.gen_range(0..self.config.p_values.len())];
        let q = self.config.q_values[rng.gen_range(0..self.config.q_values.len())];
        let (mut pair, mut rejections) = (None, 0);
        if let Some(IntervalSpec { a, b }) = self.config.interval {
            pair = Some((a, b));
        } else {
            while rejections <= MAX_REJECTIONS {
                let a = rng.gen_range(self.domain.lo..=self.domain.hi);
                let b = rng.gen_range(self.domain.lo..=self.domain.hi);
                if self.admissible(a, b) {
                    pair = Some((a, b));
                    break;
                }
                rejections += 1;
            }
        }
        let path = self.theorems.iter().any(|t| t.is_multivar()).then(|| loop {
            let s: f64 = rng.gen_range(0.02..0.98);
            let t: f64 = rng.gen_range(0.02..0.98);
            if (s - t).abs() > 1e-3 {
                break (s.min(t), s.max(t));
            }
        });
        Instance {
            trial,
            family: family.id(),
            function,
            coefficients,
            p,
            q,
            a: pair.map(|p| p.0),
            b: pair.map(|p| p.1),
            rejections,
            path,
        }
    }

    /// Parameters each theorem reads from the trial's `p` and `q`; the
    /// conjugate pair is derived from `p`.
    fn params(theorem: Theorem, p: f64, q: f64) -> BoundParams {
        match (theorem.needs_p(), theorem.needs_q()) {
            (true, _) => BoundParams::p(p),
            (false, true) => BoundParams::q(q),
            _ => BoundParams::none(),
        }
    }

    pub fn run_trial(&self, trial: u64) -> TrialReport {
        let instance = self.instance(trial);
        let mut report = TrialReport {
            seed: self.config.seed,
            trial,
            eta: self.eta.to_string(),
            instance,
            certificates: Vec::new(),
            evaluations: Vec::new(),
            relaxation: None,
        };
        let inst = &report.instance;
        let f = ScalarFunction::parse(&inst.function);
        let pair = inst.a.zip(inst.b);
        let (f, (a, b)) = match (f, pair) {
            (Ok(f), Some(pair)) => (f, pair),
            (f, pair) => {
                let reason = match (f, pair) {
                    (Err(e), _) => format!("function does not parse: {e}"),
                    _ => format!("no admissible (a, b) after {MAX_REJECTIONS} rejections"),
                };
                report.evaluations = self
                    .theorems
                    .iter()
                    .map(|&t| {
                        skipped(
                            t,
                            Self::params(t, inst.p, inst.q),
                            FailureClass::PreconditionUnmet,
                            reason.clone(),
                        )
                    })
                    .collect();
                return report;
            }
        };
        report.relaxation = self.relaxation(&f, a, b, inst.p, inst.q);

        let mut cache: Vec<(String, HypothesisCheck)> = Vec::new();
        let mut evaluations = Vec::new();
        for &theorem in &self.theorems {
            let params = Self::params(theorem, inst.p, inst.q);
            let resolved = match params.resolve(theorem) {
                Ok(r) => r,
                Err(e) => {
                    evaluations.push(skipped(theorem, params, FailureClass::PreconditionUnmet, e.to_string()));
                    continue;
                }
            };
            let key = hypothesis_key(theorem, &resolved);
            let check = match cache.iter().find(|(k, _)| *k == key) {
                Some((_, c)) => c.clone(),
                None => {
                    let c = self.certify(&f, inst, theorem, &resolved, a, b);
                    cache.push((key, c.clone()));
                    c
                }
            };
            if !check.certified {
                let reason = format!(
                    "{} not certified {}: {}",
                    check.subject,
                    check.class.name(),
                    check.reason.as_deref().unwrap_or("margin above tolerance")
                );
                evaluations.push(skipped(theorem, resolved, FailureClass::PreconditionUnmet, reason));
                continue;
            }
            let point = if theorem.is_multivar() {
                inst.path.expect("path drawn")
            } else {
                (a, b)
            };
            evaluations.push(self.judge(&f, inst, theorem, resolved, point));
        }
        report.certificates = cache.into_iter().map(|(_, c)| c).collect();
        report.evaluations = evaluations;
        report
    }

    fn relaxation(&self, f: &ScalarFunction, a: f64, b: f64, p: f64, q: f64) -> Option<RelaxationCheck> {
        let len = self.eta.eval_scalar(b, a).ok()?;
        let da = f.derivative(a).ok()?.abs();
        let db = f.derivative(b).ok()?.abs();
        let t32 = formulas::t32(len, da, db, p);
        let t33 = formulas::t33(len, da, db, p);
        let t34 = formulas::t34(len, da, db, q);
        let t35 = formulas::t35(len, da, db, q);
        if ![t32, t33, t34, t35].iter().all(|v| v.is_finite()) {
            return None;
        }
        let le = |x: f64, y: f64| x <= y + 1e-12 * y.abs();
        Some(RelaxationCheck {
            t32,
            t33,
            t34,
            t35,
            holds: le(t32, t33) && le(t34, t35),
        })
    }

    /// Certifies the hypothesis of `theorem` on the domain grid and along
    /// the trial's own pair.
    fn certify(
        &self,
        f: &ScalarFunction,
        inst: &Instance,
        theorem: Theorem,
        params: &BoundParams,
        a: f64,
        b: f64,
    ) -> HypothesisCheck {
        let h = theorem.hypothesis(params);
        if theorem.is_multivar() {
            return self.certify_path(f, inst, a, b);
        }
        let eta = if h.canonical_eta {
            EtaMap::canonical(1)
        } else {
            self.eta.clone()
        };
        let mut check = HypothesisCheck {
            subject: match h.derivative_power {
                None => "f".into(),
                Some(s) if s == 1.0 => "|f'|".into(),
                Some(s) => format!("|f'|^{s}"),
            },
            class: h.class,
            eta: eta.to_string(),
            certified: false,
            grid_margin: None,
            pair_margin: None,
            reason: None,
        };
        let outcome = match h.derivative_power {
            None => self.certify_subject(f, &eta, h.class, a, b),
            Some(s) => self.certify_subject(&DerivativeMagnitude::new(f, s), &eta, h.class, a, b),
        };
        match outcome {
            Ok((grid, pair)) => {
                check.grid_margin = Some(grid);
                check.pair_margin = Some(pair);
                check.certified = grid <= self.classify.tolerance && pair <= self.classify.tolerance;
            }
            Err(e) => check.reason = Some(e.to_string()),
        }
        check
    }

    fn certify_subject<F: RealFunction + ?Sized>(
        &self,
        g: &F,
        eta: &EtaMap,
        class: ConvexityClass,
        a: f64,
        b: f64,
    ) -> Result<(f64, f64)> {
        let domain = InvexDomain::interval(self.domain.lo, self.domain.hi, eta.clone())?;
        let cert = classify(g, &domain, class, &self.classify)?;
        let (pair, _) = pair_margin(g, eta, a, b, class, self.config.grid.pair_t_points)?;
        Ok((cert.worst_margin, pair))
    }

    fn path(&self, f: &ScalarFunction, a: f64, b: f64) -> Result<EtaPath> {
        let fz = Expression::from_node(f.expression().root().clone(), &["z1"])?;
        EtaPath::new(fz, self.eta.as_vector(), vec![a], vec![b])
    }

    fn path_options(&self) -> PathOptions {
        PathOptions {
            points: self.config.grid.points,
            lambda_points: self.config.grid.t_points,
            tolerance: self.classify.tolerance,
            ..PathOptions::default()
        }
    }

    fn certify_path(&self, f: &ScalarFunction, inst: &Instance, a: f64, b: f64) -> HypothesisCheck {
        let mut check = HypothesisCheck {
            subject: "f along path".into(),
            class: ConvexityClass::LogPreinvex,
            eta: self.eta.to_string(),
            certified: false,
            grid_margin: None,
            pair_margin: None,
            reason: None,
        };
        let outcome = self.path(f, a, b).and_then(|path| {
            let cert = check_path_logpreinvex(&path, &self.path_options())?;
            let (sa, sb) = inst.path.expect("path drawn");
            let pair = path
                .logpreinvex_margin(sa, sb, 0.5)
                .map_err(|e| Error::eval("path pair", e))?;
            Ok((cert, pair))
        });
        match outcome {
            Ok((cert, pair)) => {
                check.grid_margin = Some(cert.certificate.worst_margin);
                check.pair_margin = Some(pair);
                check.certified = cert.certified() && pair <= self.classify.tolerance;
            }
            Err(e) => check.reason = Some(e.to_string()),
        }
        check
    }

    fn evaluate(
        &self,
        f: &ScalarFunction,
        inst: &Instance,
        theorem: Theorem,
        params: &BoundParams,
        point: (f64, f64),
        options: &VerifyOptions,
    ) -> Result<BoundEvaluation> {
        if theorem.is_multivar() {
            let (a, b) = inst.a.zip(inst.b).expect("pair drawn");
            let path = self.path(f, a, b)?;
            let opts = MultivarOptions {
                verify: *options,
                path: self.path_options(),
                certify: false,
            };
            Ok(verify_multivar(theorem, &path, point.0, point.1, params, &opts)?.evaluation)
        } else {
            verify(theorem, f, &self.eta, point.0, point.1, params, options)
        }
    }

    /// Evaluates a certified instance and passes violations through the
    /// soundness gate.
    fn judge(
        &self,
        f: &ScalarFunction,
        inst: &Instance,
        theorem: Theorem,
        params: BoundParams,
        point: (f64, f64),
    ) -> TrialEvaluation {
        let evaluation = match self.evaluate(f, inst, theorem, &params, point, &self.verify) {
            Ok(e) => e,
            Err(e) => return skipped(theorem, params, error_class(&e), e.to_string()),
        };
        let mut out = TrialEvaluation {
            theorem,
            params,
            status: Status::Holds,
            classification: None,
            reason: None,
            evaluation: None,
            recheck: None,
            kernel_dominates: None,
        };
        match evaluation.verdict {
            Verdict::Holds => {}
            Verdict::Inconclusive => {
                out.status = Status::Inconclusive;
                out.classification = Some(FailureClass::NumericalInconclusive);
                out.reason = Some("margin within the verification tolerance of the error budget".into());
            }
            Verdict::Violated => {
                let gate = self.gate(f, inst, theorem, &params, point, &evaluation);
                out.status = gate.status;
                out.classification = Some(gate.class);
                out.reason = Some(gate.reason);
                out.recheck = gate.recheck;
                out.kernel_dominates = gate.kernel_dominates;
            }
        }
        out.evaluation = Some(evaluation);
        out
    }

    fn gate(
        &self,
        f: &ScalarFunction,
        inst: &Instance,
        theorem: Theorem,
        params: &BoundParams,
        point: (f64, f64),
        evaluation: &BoundEvaluation,
    ) -> Gate {
        let tight = match self.evaluate(f, inst, theorem, params, point, &self.tight) {
            Ok(e) => e,
            Err(e) => {
                return Gate {
                    status: Status::Inconclusive,
                    class: FailureClass::NumericalInconclusive,
                    reason: format!("recheck failed: {e}"),
                    recheck: None,
                    kernel_dominates: None,
                }
            }
        };
        let recheck = Recheck {
            lhs: tight.lhs,
            rhs: tight.rhs,
            margin: tight.margin,
            error_budget: tight.error_budget,
            verdict: tight.verdict,
        };
        let kernel_dominates = tight.kernel.map(|k| tight.lhs <= k + tight.error_budget);
        if tight.verdict != Verdict::Violated || evaluation.verdict != Verdict::Violated {
            return Gate {
                status: Status::Inconclusive,
                class: FailureClass::NumericalInconclusive,
                reason: "violation did not survive the tighter recheck".into(),
                recheck: Some(recheck),
                kernel_dominates,
            };
        }
        let as_printed = theorem.as_printed_note().is_some() && kernel_dominates != Some(false);
        Gate {
            status: Status::Violated,
            class: if as_printed {
                FailureClass::PaperAsPrintedViolation
            } else {
                FailureClass::UnexplainedViolation
            },
            reason: if as_printed {
                "bound evaluated as printed is exceeded; the gap stays below the tight kernel".into()
            } else {
                "a proven bound is exceeded".into()
            },
            recheck: Some(recheck),
            kernel_dominates,
        }
    }

    /// All trials, in index order.
    pub fn run(&self) -> CampaignResult {
        let reports: Vec<TrialReport> = (0..self.config.trials)
            .into_par_iter()
            .map(|t| self.run_trial(t))
            .collect();
        let summary = self.summarize(&reports);
        CampaignResult { reports, summary }
    }

    pub fn summarize(&self, reports: &[TrialReport]) -> CampaignSummary {
        let mut per_theorem: BTreeMap<String, TheoremSummary> = self
            .theorems
            .iter()
            .map(|t| (t.id().to_string(), TheoremSummary::default()))
            .collect();
        let mut classifications = BTreeMap::new();
        let (mut evaluations, mut violations, mut unexplained) = (0, 0, 0);
        let mut relaxation = RelaxationSummary::default();
        for report in reports {
            if let Some(r) = report.relaxation {
                relaxation.checked += 1;
                relaxation.failures += u64::from(!r.holds);
            }
            for e in &report.evaluations {
                let s = per_theorem.entry(e.theorem.id().to_string()).or_default();
                match e.status {
                    Status::Holds => s.holds += 1,
                    Status::Violated => s.violated += 1,
                    Status::Inconclusive => s.inconclusive += 1,
                    Status::Skipped => s.skipped += 1,
                }
                if let Some(c) = e.classification {
                    *classifications.entry(c.name().to_string()).or_insert(0) += 1;
                    if c == FailureClass::UnexplainedViolation {
                        unexplained += 1;
                    }
                }
                if e.status == Status::Violated {
                    violations += 1;
                }
                if let Some(ev) = e.evaluation.as_ref().filter(|_| e.status != Status::Skipped) {
                    evaluations += 1;
                    s.histogram.add(ev.margin);
                    if s.min_margin.is_none_or(|m| ev.margin < m) {
                        s.min_margin = Some(ev.margin);
                        s.min_margin_trial = Some(report.trial);
                    }
                }
            }
        }
        CampaignSummary {
            seed: self.config.seed,
            trials: self.config.trials,
            evaluations,
            violations,
            unexplained_violations: unexplained,
            classifications,
            per_theorem,
            relaxation,
        }
    }

    /// Runs the campaign, then descends on the margin around every
    /// near-tight instance and keeps the violations that are confirmed.
    pub fn search(&self) -> SearchOutcome {
        let result = self.run();
        let candidates: Vec<(&TrialReport, &TrialEvaluation)> = result
            .reports
            .iter()
            .flat_map(|r| r.evaluations.iter().map(move |e| (r, e)))
            .filter(|(_, e)| {
                e.status != Status::Skipped
                    && e.evaluation
                        .as_ref()
                        .is_some_and(|ev| ev.margin < 10.0 * self.verify.tolerance)
            })
            .collect();
        let violations = candidates
            .par_iter()
            .filter_map(|(r, e)| self.refine(&r.instance, e))
            .collect();
        SearchOutcome { result, violations }
    }

    fn refine(&self, inst: &Instance, start: &TrialEvaluation) -> Option<ConfirmedViolation> {
        let f = ScalarFunction::parse(&inst.function).ok()?;
        let theorem = start.theorem;
        let params = start.params;
        let multivar = theorem.is_multivar();
        let mut point = if multivar { inst.path? } else { (inst.a?, inst.b?) };
        let mut current = start.evaluation.clone()?;
        let mut step = if multivar { 0.05 } else { 0.05 * self.domain.width() };
        let hypothesis = theorem.hypothesis(&params);
        let mut steps = 0;
        for _ in 0..DESCENT_STEPS {
            steps += 1;
            let mut best: Option<((f64, f64), BoundEvaluation)> = None;
            for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let cand = (point.0 + da, point.1 + db);
                if multivar {
                    if !(cand.0 > 0.0 && cand.1 < 1.0 && cand.0 < cand.1) {
                        continue;
                    }
                } else {
                    if !self.admissible(cand.0, cand.1) {
                        continue;
                    }
                    if !self.pair_certified(&f, theorem, &hypothesis, cand) {
                        continue;
                    }
                }
                let Ok(e) = self.evaluate(&f, inst, theorem, &params, cand, &self.verify) else {
                    continue;
                };
                let better = best
                    .as_ref()
                    .map_or(e.margin < current.margin, |(_, b)| e.margin < b.margin);
                if better {
                    best = Some((cand, e));
                }
            }
            match best {
                Some((p, e)) => {
                    point = p;
                    current = e;
                }
                None => step *= DESCENT_DECAY,
            }
        }
        if current.verdict != Verdict::Violated {
            return None;
        }
        let gate = self.gate(&f, inst, theorem, &params, point, &current);
        if gate.status != Status::Violated {
            return None;
        }
        Some(ConfirmedViolation {
            trial: inst.trial,
            theorem,
            family: inst.family.clone(),
            function: inst.function.clone(),
            a: if multivar { inst.a? } else { point.0 },
            b: if multivar { inst.b? } else { point.1 },
            path: multivar.then_some(point),
            classification: gate.class,
            kernel: current.kernel,
            evaluation: current,
            recheck: gate.recheck?,
            kernel_dominates: gate.kernel_dominates,
            descent_steps: steps,
        })
    }

    /// The hypothesis along the segment of a moved pair.
    fn pair_certified(&self, f: &ScalarFunction, theorem: Theorem, h: &bounds::Hypothesis, (a, b): (f64, f64)) -> bool {
        let eta = if theorem.is_classical() {
            EtaMap::canonical(1)
        } else {
            self.eta.clone()
        };
        let n = self.config.grid.pair_t_points;
        let margin = match h.derivative_power {
            None => pair_margin(f, &eta, a, b, h.class, n),
            Some(s) => pair_margin(&DerivativeMagnitude::new(f, s), &eta, a, b, h.class, n),
        };
        matches!(margin, Ok((m, _)) if m <= self.classify.tolerance)
    }
}

struct Gate {
    status: Status,
    class: FailureClass,
    reason: String,
    recheck: Option<Recheck>,
    kernel_dominates: Option<bool>,
}

fn skipped(theorem: Theorem, params: BoundParams, class: FailureClass, reason: String) -> TrialEvaluation {
    TrialEvaluation {
        theorem,
        params,
        status: Status::Skipped,
        classification: Some(class),
        reason: Some(reason),
        evaluation: None,
        recheck: None,
        kernel_dominates: None,
    }
}

fn error_class(e: &Error) -> FailureClass {
    match e {
        Error::Eval { .. } | Error::Quadrature(_) | Error::Certification(_) => FailureClass::NumericalInconclusive,
        _ => FailureClass::PreconditionUnmet,
    }
}

fn hypothesis_key(theorem: Theorem, params: &BoundParams) -> String {
    if theorem.is_multivar() {
        return "path".into();
    }
    let h = theorem.hypothesis(params);
    format!(
        "{:?}/{}/{}",
        h.derivative_power.map(f64::to_bits),
        h.class.name(),
        h.canonical_eta
    )
}

pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    Ok(Campaign::new(config.clone())?.run())
}

pub fn search_counterexamples(config: &CampaignConfig) -> Result<SearchOutcome> {
    Ok(Campaign::new(config.clone())?.search())
}
