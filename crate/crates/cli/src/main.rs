mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hhinvex::bounds::{self, BoundEvaluation, BoundParams, Theorem, Verdict, VerifyOptions};
use hhinvex::harness::{Campaign, CampaignConfig, CampaignResult, ConfirmedViolation};
use hhinvex::invex::{classify, ClassifyOptions, ConvexityClass, EtaMap, InvexDomain};
use hhinvex::multivar::{self, EtaPath, MultivarOptions};
use hhinvex::quadrature::QuadratureOptions;
use hhinvex::{DerivativeMagnitude, Error, ScalarFunction};

use report::{document, float, opt_float, to_json};

const OK: u8 = 0;
const USAGE: u8 = 1;
const REFUTED: u8 = 2;
const INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hhinvex",
    version,
    about = "Generalized-convexity certificates and midpoint bound verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an expression and print its AST and partial derivatives.
    Parse(ParseArgs),
    /// Certify or refute a class for f (or |f'|^s) on an interval.
    Classify(ClassifyArgs),
    /// Verify midpoint and trapezoid bounds at one (a, b).
    Verify(VerifyArgs),
    /// Verify a bound along an eta-path in several variables.
    Multivar(MultivarArgs),
    /// Run a seeded randomized campaign from a JSON config.
    Campaign(CampaignArgs),
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    expr: String,
    /// Comma-separated variable names.
    #[arg(long, value_delimiter = ',', default_value = "x")]
    vars: Vec<String>,
}

#[derive(Args, Serialize)]
struct ClassifyArgs {
    /// f in the variable x.
    #[arg(long)]
    f: String,
    /// eta(v, u) in u and v.
    #[arg(long)]
    eta: String,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, required = true)]
    domain: Vec<f64>,
    #[arg(long, default_value = "preinvex")]
    target: String,
    /// Grid points per axis for u and v.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 33)]
    t_points: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 2)]
    refine_rounds: usize,
    /// Classify |f'|^s instead of f.
    #[arg(long)]
    derivative_power: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    f: String,
    #[arg(long)]
    eta: String,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    /// Comma-separated theorem ids (T2.1 is the chain).
    #[arg(long, value_delimiter = ',', required = true)]
    theorems: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    /// Overrides the symbolic derivative of f.
    #[arg(long)]
    derivative: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    out: Format,
    #[arg(long, default_value_t = hhinvex::quadrature::DEFAULT_TOLERANCE)]
    quad_tol: f64,
    #[arg(long, default_value_t = bounds::DEFAULT_VERIFY_TOLERANCE)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct MultivarArgs {
    /// f in z1..zn.
    #[arg(long)]
    f: String,
    /// Comma-separated coordinates of x.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    y: Vec<f64>,
    /// Components of eta(v, u) in u1..un, v1..vn separated by `;`.
    /// Defaults to v − u.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value = "Eq1")]
    theorem: String,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    /// Skip the log-preinvexity certificate along the path.
    #[arg(long)]
    no_certify: bool,
    #[arg(long, default_value_t = hhinvex::quadrature::DEFAULT_TOLERANCE)]
    quad_tol: f64,
    #[arg(long, default_value_t = bounds::DEFAULT_VERIFY_TOLERANCE)]
    tol: f64,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also descend on near-tight instances and write violations.json.
    #[arg(long)]
    search: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult = Result<u8, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(USAGE);
    }
    let outcome = match cli.command {
        Command::Parse(args) => cmd_parse(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Multivar(args) => cmd_multivar(args),
        Command::Campaign(args) => cmd_campaign(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HHINVEX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("HHINVEX_THREADS must be a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Rendered {
    ast: String,
    expression: String,
}

fn cmd_parse(args: ParseArgs) -> CliResult {
    let vars: Vec<&str> = args.vars.iter().map(|s| s.trim()).collect();
    let e = hhinvex::expr::Expression::parse(&args.expr, &vars).map_err(Error::from)?;
    let mut derivatives = std::collections::BTreeMap::new();
    for v in &vars {
        let d = e.differentiate(v).map_err(Error::from)?;
        derivatives.insert(
            v.to_string(),
            Rendered {
                ast: d.ast_string(),
                expression: d.to_string(),
            },
        );
    }
    #[derive(Serialize)]
    struct Body {
        parsed: Rendered,
        derivatives: std::collections::BTreeMap<String, Rendered>,
    }
    #[derive(Serialize)]
    struct Inputs<'a> {
        expr: &'a str,
        vars: &'a [&'a str],
    }
    let body = Body {
        parsed: Rendered {
            ast: e.ast_string(),
            expression: e.to_string(),
        },
        derivatives,
    };
    let inputs = Inputs {
        expr: &args.expr,
        vars: &vars,
    };
    print!("{}", to_json(&document("parse", inputs, body)));
    Ok(OK)
}

fn cmd_classify(args: ClassifyArgs) -> CliResult {
    let target: ConvexityClass = args.target.parse()?;
    let f = ScalarFunction::parse(&args.f)?;
    let eta = EtaMap::parse(&args.eta)?;
    let domain = InvexDomain::interval(args.domain[0], args.domain[1], eta)?;
    let options = ClassifyOptions {
        points: args.grid,
        t_points: args.t_points,
        tolerance: args.tol,
        refine_rounds: args.refine_rounds,
        ..ClassifyOptions::default()
    };
    let certificate = match args.derivative_power {
        None => classify(&f, &domain, target, &options)?,
        Some(s) if s.is_finite() && s > 0.0 => classify(&DerivativeMagnitude::new(&f, s), &domain, target, &options)?,
        Some(s) => return Err(CliError::Usage(format!("--derivative-power must be positive, got {s}"))),
    };
    #[derive(Serialize)]
    struct Body {
        certificate: hhinvex::ClassCertificate,
        certified: bool,
    }
    let certified = certificate.certified();
    print!(
        "{}",
        to_json(&document("classify", &args, Body { certificate, certified }))
    );
    Ok(if certified { OK } else { REFUTED })
}

fn params(p: Option<f64>, q: Option<f64>) -> BoundParams {
    BoundParams { p, q }
}

fn verdict_code<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> u8 {
    let (mut violated, mut inconclusive) = (false, false);
    for v in verdicts {
        violated |= *v == Verdict::Violated;
        inconclusive |= *v == Verdict::Inconclusive;
    }
    if violated {
        REFUTED
    } else if inconclusive {
        INCONCLUSIVE
    } else {
        OK
    }
}

const VERIFY_COLUMNS: [&str; 12] = [
    "theorem",
    "a",
    "b",
    "eta_ab",
    "p",
    "q",
    "lhs",
    "rhs",
    "margin",
    "error_budget",
    "verdict",
    "kernel",
];

fn cmd_verify(args: VerifyArgs) -> CliResult {
    let theorems = args
        .theorems
        .iter()
        .map(|s| s.parse::<Theorem>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut f = ScalarFunction::parse(&args.f)?;
    if let Some(d) = &args.derivative {
        f = f.with_derivative(d)?;
    }
    let eta = EtaMap::parse(&args.eta)?;
    let params = params(args.p, args.q);
    // reject bad parameters before any evaluation
    for t in &theorems {
        params.resolve(*t)?;
    }
    let options = VerifyOptions {
        quadrature: QuadratureOptions {
            tolerance: args.quad_tol,
            ..QuadratureOptions::default()
        },
        tolerance: args.tol,
    };
    let evaluations = theorems
        .iter()
        .map(|t| bounds::verify(*t, &f, &eta, args.a, args.b, &params, &options))
        .collect::<Result<Vec<BoundEvaluation>, _>>()?;
    let code = verdict_code(evaluations.iter().map(|e| &e.verdict));
    match args.out {
        Format::Json => {
            #[derive(Serialize)]
            struct Body {
                evaluations: Vec<BoundEvaluation>,
            }
            print!("{}", to_json(&document("verify", &args, Body { evaluations })));
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(std::io::stdout());
            w.write_record(VERIFY_COLUMNS).map_err(io_error)?;
            for e in &evaluations {
                w.write_record([
                    e.theorem.id().to_string(),
                    float(e.a),
                    float(e.b),
                    float(e.eta_ab),
                    opt_float(e.params.p),
                    opt_float(e.params.q),
                    float(e.lhs),
                    float(e.rhs),
                    float(e.margin),
                    float(e.error_budget),
                    e.verdict.name().to_string(),
                    opt_float(e.kernel),
                ])
                .map_err(io_error)?;
            }
            w.flush().map_err(|e| io_error(e.into()))?;
        }
    }
    Ok(code)
}

fn cmd_multivar(args: MultivarArgs) -> CliResult {
    let theorem: Theorem = args.theorem.parse()?;
    if !theorem.is_multivar() {
        return Err(CliError::Usage(format!("--theorem must be Eq1 or Eq2, got {theorem}")));
    }
    let n = args.x.len();
    if args.y.len() != n {
        return Err(CliError::Usage(format!(
            "--x has {n} coordinates but --y has {}",
            args.y.len()
        )));
    }
    let eta = match &args.eta {
        None => EtaMap::canonical(n),
        Some(src) => {
            let parts: Vec<&str> = src.split(';').map(str::trim).collect();
            EtaMap::parse_components(&parts)?
        }
    };
    let f = multivar::parse_function(&args.f, n)?;
    let path = EtaPath::new(f, eta, args.x.clone(), args.y.clone())?;
    let options = MultivarOptions {
        verify: VerifyOptions {
            quadrature: QuadratureOptions {
                tolerance: args.quad_tol,
                ..QuadratureOptions::default()
            },
            tolerance: args.tol,
        },
        certify: !args.no_certify,
        ..MultivarOptions::default()
    };
    let evaluation = multivar::verify_multivar(theorem, &path, args.a, args.b, &params(args.p, args.q), &options)?;
    let code = verdict_code([&evaluation.evaluation.verdict]);
    #[derive(Serialize)]
    struct Body {
        evaluation: multivar::MultivarEvaluation,
    }
    print!("{}", to_json(&document("multivar", &args, Body { evaluation })));
    Ok(code)
}

pub const TRIAL_COLUMNS: [&str; 15] = [
    "seed",
    "trial",
    "theorem",
    "lhs",
    "rhs",
    "margin",
    "verdict",
    "error_budget",
    "classification",
    "family",
    "function",
    "a",
    "b",
    "p",
    "q",
];

fn io_error(e: csv::Error) -> CliError {
    CliError::Usage(format!("write failed: {e}"))
}

fn trials_csv(result: &CampaignResult) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(TRIAL_COLUMNS).map_err(io_error)?;
    for r in &result.reports {
        for e in &r.evaluations {
            let ev = e.evaluation.as_ref();
            w.write_record([
                r.seed.to_string(),
                r.trial.to_string(),
                e.theorem.id().to_string(),
                opt_float(ev.map(|v| v.lhs)),
                opt_float(ev.map(|v| v.rhs)),
                opt_float(ev.map(|v| v.margin)),
                e.status.name().to_string(),
                opt_float(ev.map(|v| v.error_budget)),
                e.classification.map(|c| c.name()).unwrap_or_default().to_string(),
                r.instance.family.clone(),
                r.instance.function.clone(),
                opt_float(r.instance.a),
                opt_float(r.instance.b),
                opt_float(e.params.p),
                opt_float(e.params.q),
            ])
            .map_err(io_error)?;
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

fn cmd_campaign(args: CampaignArgs) -> CliResult {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let config: CampaignConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    let campaign = Campaign::new(config)?;
    let (result, violations) = if args.search {
        let outcome = campaign.search();
        (outcome.result, Some(outcome.violations))
    } else {
        (campaign.run(), None)
    };
    fs::create_dir_all(&args.out).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", args.out.display())))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = args.out.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
    };

    #[derive(Serialize)]
    struct Summary<'a> {
        summary: &'a hhinvex::harness::CampaignSummary,
    }
    let summary = to_json(&document(
        "campaign",
        campaign.config(),
        Summary {
            summary: &result.summary,
        },
    ));
    write("summary.json", summary.as_bytes())?;
    write("trials.csv", &trials_csv(&result)?)?;
    let mut violated = result.summary.violations > 0;
    if let Some(v) = &violations {
        #[derive(Serialize)]
        struct Found<'a> {
            violations: &'a [ConfirmedViolation],
        }
        write(
            "violations.json",
            to_json(&document("campaign", campaign.config(), Found { violations: v })).as_bytes(),
        )?;
        violated |= !v.is_empty();
    }
    print!("{summary}");
    Ok(if violated { REFUTED } else { OK })
}
