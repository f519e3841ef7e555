//! Command-line driver. Every command writes one JSON artifact.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::constructions::{
    build_x, extract_uncovered_point, reindex_density_avoid, reindex_ln_avoid, thin_reindex, union_reindex_mprime,
    verify_microscopic,
};
use crate::covers::{
    adversary_generate, corollary_witness, covers_region, hypothesis_record, trial_rng, validate, AdversaryParams, Budget, Constraint,
    CoverAttempt, Strategy, ValidationReport,
};
use crate::error::{Error, Result};
use crate::exact::{Interval, Rational};
use crate::omega::{parse_omega_set, OmegaSet};
use crate::spacing::{build_k_hierarchy, place_intervals};

pub const SCHEMA: &str = "microcover/1";

#[derive(Debug, Parser, Serialize)]
#[command(name = "microcover", version, about = "Exact interval constructions around microscopic sets")]
pub struct Cli {
    /// seed for every random choice, echoed into the artifact
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// length base for cover constraints
    #[arg(long, global = true, default_value = "1/7")]
    pub eps: String,
    /// largest precision in bits for logarithmic bounds
    #[arg(long, global = true, default_value_t = crate::covers::DEFAULT_PRECISION_CAP)]
    pub precision_cap: u32,
    /// write the artifact here instead of stdout
    #[arg(long, short, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Build the spacing hierarchy and place intervals for `A`
    Spacing(SpacingArgs),
    /// Exact and windowed density of an index set
    Density(DensityArgs),
    /// Validate a cover file against its length constraint
    CheckCover(CheckCoverArgs),
    /// Materialize the nested set X
    BuildX(BuildXArgs),
    /// Seeded adversary trials against the witness search
    Challenge(ChallengeArgs),
    /// Re-index a cover onto another index set
    Reindex(ReindexArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SpacingArgs {
    #[arg(long, default_value_t = 0)]
    pub m: u64,
    #[arg(long, default_value_t = 2)]
    pub depth: u32,
    #[arg(long = "A", default_value = "(w+1)")]
    #[serde(rename = "A")]
    pub a: String,
    /// number of placed intervals; defaults to every terminal
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub set: String,
    #[arg(long, default_value_t = 1 << 20)]
    pub window: u64,
    #[arg(long, default_value_t = 64)]
    pub samples: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Geometric,
    Logarithmic,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckCoverArgs {
    #[arg(long)]
    pub file: PathBuf,
    /// override the file's constraint kind (uses --eps)
    #[arg(long)]
    pub constraint: Option<ConstraintKind>,
    /// also report whether the cover contains `lo,hi`
    #[arg(long)]
    pub region: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildXArgs {
    #[arg(long, default_value_t = 2)]
    pub depth: u32,
    #[arg(long, default_value_t = 64)]
    pub cutoff: u64,
    /// also emit the canonical cover of this level, checked against --eps
    #[arg(long)]
    pub verify_level: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChallengeMode {
    /// least witness in one spacing family on [0, 1]
    Corollary,
    /// nested chain through X
    Chain,
}

#[derive(Debug, Args, Serialize)]
pub struct ChallengeArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, value_enum, default_value = "corollary")]
    pub mode: ChallengeMode,
    #[arg(long, default_value = "density-budget")]
    pub strategy: String,
    /// `sqrt`, `unlimited` or a fraction `p/q`
    #[arg(long, default_value = "sqrt")]
    pub budget: String,
    #[arg(long, default_value_t = 3)]
    pub depth: u32,
    /// last cover index; defaults to the largest placed index
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long = "A", default_value = "(w+1)")]
    #[serde(rename = "A")]
    pub a: String,
    /// index cutoff of X in chain mode
    #[arg(long, default_value_t = 2000)]
    pub cutoff: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReindexArgs {
    #[command(subcommand)]
    pub transform: Transform,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "transform")]
pub enum Transform {
    /// Spread an ω-indexed cover onto (k+1)·(ω+1)
    Thin {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: u64,
    },
    /// Merge covers on 2^(k+1)·(ω+1) into one cover
    Union {
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
    },
    /// Move a seeded logarithmic cover onto indices avoiding a density-zero set
    Ln {
        #[arg(long, default_value = "{}")]
        avoid: String,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        window: u64,
    },
    /// Move a geometric cover with |I_e| <= eps^(m(e+1)) onto indices avoiding a set
    Density {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "{}")]
        avoid: String,
        #[arg(long, default_value_t = 4)]
        m: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spacing(_) => "spacing",
            Command::Density(_) => "density",
            Command::CheckCover(_) => "check-cover",
            Command::BuildX(_) => "build-x",
            Command::Challenge(_) => "challenge",
            Command::Reindex(_) => "reindex",
        }
    }
}

/// Result of one invocation: exit code and artifact bytes.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub artifact: Vec<u8>,
    pub diagnostic: Option<String>,
}

/// Parse `args` (including the program name) and run the command without touching stdout.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            return Outcome { code, artifact: Vec::new(), diagnostic: Some(e.to_string()) };
        }
    };
    let (code, result, diagnostic) = match dispatch(&cli) {
        Ok((code, v)) => (code, v, None),
        Err(e) => (e.exit_code(), json!({ "error": { "kind": error_kind(&e), "message": e.to_string() } }), Some(e.to_string())),
    };
    let artifact = json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "config": &cli,
        "seed": cli.seed,
        "exit_code": code,
        "result": result,
    });
    let mut bytes = serde_json::to_vec_pretty(&artifact).expect("artifact serializes");
    bytes.push(b'\n');
    Outcome { code, artifact: bytes, diagnostic }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::Precondition(_) => "precondition",
        Error::Validation(_) => "validation",
        Error::PrefixExhausted { .. } => "prefix-exhausted",
        Error::WindowInsufficient(_) => "window-insufficient",
        Error::InfeasibleBudget(_) => "infeasible-budget",
        Error::Normalization(_) => "normalization",
        Error::Io(_) => "io",
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn dispatch(cli: &Cli) -> Result<(i32, Value)> {
    let eps: Rational = cli.eps.parse()?;
    if !eps.is_positive() || eps >= Rational::one() {
        return Err(Error::Precondition(format!("eps = {eps} is not in (0, 1)")));
    }
    match &cli.command {
        Command::Spacing(a) => spacing(a),
        Command::Density(a) => density(a),
        Command::CheckCover(a) => check_cover(a, &eps, cli.precision_cap),
        Command::BuildX(a) => build(a, &eps),
        Command::Challenge(a) => challenge(a, &eps, cli.seed),
        Command::Reindex(a) => reindex(&a.transform, &eps, cli.seed, cli.precision_cap),
    }
}

fn read_cover(path: &PathBuf) -> Result<CoverAttempt> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_interval(text: &str) -> Result<Interval> {
    let (lo, hi) = text.split_once(',').ok_or_else(|| Error::Parse(format!("expected `lo,hi`, got `{text}`")))?;
    Interval::new(lo.trim().parse()?, hi.trim().parse()?)
}

fn spacing(a: &SpacingArgs) -> Result<(i32, Value)> {
    let set = parse_omega_set(&a.a)?;
    let root = Interval::with_length(Rational::zero(), &Rational::inv_pow7(a.m));
    let tree = build_k_hierarchy(&root, a.m, a.depth)?;
    let count = a.count.unwrap_or(tree.terminal_count() as usize);
    let placed = place_intervals(&tree, &set, count)?;
    Ok((0, json!({ "tree": to_value(&tree), "placed": to_value(&placed) })))
}

fn density(a: &DensityArgs) -> Result<(i32, Value)> {
    let set = parse_omega_set(&a.set)?;
    let report = set.density_estimate(a.window, a.samples)?;
    Ok((0, json!({ "set": to_value(&set), "report": to_value(&report) })))
}

fn validation_code(report: &ValidationReport) -> i32 {
    if !report.violations().is_empty() {
        1
    } else if !report.indeterminate().is_empty() {
        2
    } else {
        0
    }
}

fn check_cover(a: &CheckCoverArgs, eps: &Rational, cap: u32) -> Result<(i32, Value)> {
    let mut cover = read_cover(&a.file)?;
    if let Some(kind) = a.constraint {
        cover = cover.with_constraint(match kind {
            ConstraintKind::Geometric => Constraint::geometric(eps.clone()),
            ConstraintKind::Logarithmic => Constraint::logarithmic(eps.clone()),
        });
    }
    let report = validate(&cover, cap);
    let mut out = json!({
        "constraint": to_value(cover.constraint()),
        "validation": to_value(&report),
        "violations": report.violations(),
        "indeterminate": report.indeterminate(),
    });
    if let Some(region) = &a.region {
        out["coverage"] = to_value(&covers_region(&cover, &[parse_interval(region)?]));
    }
    Ok((validation_code(&report), out))
}

fn build(a: &BuildXArgs, eps: &Rational) -> Result<(i32, Value)> {
    let x = build_x(a.depth, a.cutoff)?;
    x.check_invariants().map_err(Error::Validation)?;
    let mut out = json!({ "x": to_value(&x) });
    let mut code = 0;
    if let Some(level) = a.verify_level {
        let check = verify_microscopic(&x, eps, level)?;
        code = validation_code(&check.validation);
        if !check.coverage.covered {
            code = code.max(1);
        }
        out["microscopic"] = to_value(&check);
    }
    Ok((code, out))
}

fn parse_budget(text: &str) -> Result<Budget> {
    match text {
        "sqrt" => Ok(Budget::Sqrt),
        "unlimited" => Ok(Budget::Unlimited),
        _ => {
            let (p, q) = text.split_once('/').ok_or_else(|| Error::Parse(format!("unknown budget `{text}`")))?;
            let num = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad budget `{text}`")));
            Ok(Budget::Fraction(num(p)?, num(q)?))
        }
    }
}

fn parse_strategy(text: &str) -> Result<Strategy> {
    serde_json::from_value(Value::String(text.into())).map_err(|_| Error::Parse(format!("unknown strategy `{text}`")))
}

#[derive(Serialize)]
struct Trial {
    trial: u64,
    sub_seed: u64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Value>,
    certificate_size: usize,
    indices_used: usize,
    hypothesis_holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn challenge(a: &ChallengeArgs, eps: &Rational, seed: u64) -> Result<(i32, Value)> {
    let strategy = parse_strategy(&a.strategy)?;
    let budget = parse_budget(&a.budget)?;
    if eps != &Rational::frac(1, 7) {
        return Err(Error::Precondition("challenges run against the 1/7 scale".into()));
    }
    let constraint = Constraint::geometric(eps.clone());
    let mut trials = Vec::with_capacity(a.trials as usize);
    match a.mode {
        ChallengeMode::Corollary => {
            let set = parse_omega_set(&a.a)?;
            let unit = Interval::new(Rational::zero(), Rational::one())?;
            let tree = build_k_hierarchy(&unit, 0, a.depth)?;
            let placed = place_intervals(&tree, &set, tree.terminal_count() as usize)?;
            let window = a.window.unwrap_or_else(|| placed.indices().last().unwrap_or(0));
            let params = AdversaryParams {
                window_end: window,
                constraint,
                budget,
                min_index: 0,
                targets: placed.placements().iter().map(|p| p.interval.clone()).collect(),
                anchors: Vec::new(),
            };
            for t in 0..a.trials {
                let sub_seed = trial_rng(seed, t).gen::<u64>();
                let cover = adversary_generate(strategy, &params, sub_seed)?;
                let trial = match corollary_witness(&placed, &cover) {
                    Ok(r) => Trial {
                        trial: t,
                        sub_seed,
                        status: status_for(r.hypothesis.holds),
                        witness: Some(json!(r.certificate.witness)),
                        certificate_size: r.certificate.checks.len(),
                        indices_used: cover.len(),
                        hypothesis_holds: r.hypothesis.holds,
                        note: None,
                    },
                    Err(Error::WindowInsufficient(msg)) => Trial {
                        trial: t,
                        sub_seed,
                        status: "window-insufficient",
                        witness: None,
                        certificate_size: 0,
                        indices_used: cover.len(),
                        hypothesis_holds: hypothesis_record(&placed, &cover).holds,
                        note: Some(msg),
                    },
                    Err(e) => return Err(e),
                };
                trials.push(trial);
            }
        }
        ChallengeMode::Chain => {
            let x = build_x(a.depth, a.cutoff)?;
            let window = a.window.unwrap_or(a.cutoff);
            let params = AdversaryParams {
                window_end: window,
                constraint,
                budget,
                min_index: 0,
                targets: x.x_level(a.depth),
                anchors: Vec::new(),
            };
            for t in 0..a.trials {
                let sub_seed = trial_rng(seed, t).gen::<u64>();
                let cover = adversary_generate(strategy, &params, sub_seed)?;
                let outcome = extract_uncovered_point(&x, &cover, a.depth)?;
                let holds = outcome
                    .chain
                    .certificates
                    .iter()
                    .map(|c| c.hypothesis.holds)
                    .chain(outcome.failure.as_ref().and_then(|f| f.hypothesis.as_ref()).map(|h| h.holds))
                    .try_fold(true, |acc, h| h.map(|h| acc && h));
                let size = outcome.chain.certificates.iter().map(|c| c.disjoint_from.len()).sum();
                trials.push(Trial {
                    trial: t,
                    sub_seed,
                    status: if outcome.is_complete() { status_for(holds) } else { "window-insufficient" },
                    witness: Some(to_value(&outcome.chain.chain.iter().map(|l| l.j).collect::<Vec<_>>())),
                    certificate_size: size,
                    indices_used: cover.len(),
                    hypothesis_holds: holds,
                    note: outcome.failure.map(|f| format!("level {}: {}", f.level, f.reason)),
                });
            }
        }
    }
    let count = |s: &str| trials.iter().filter(|t| t.status == s).count();
    let guaranteed = trials.iter().filter(|t| t.hypothesis_holds == Some(true)).count();
    let guaranteed_failures =
        trials.iter().filter(|t| t.hypothesis_holds != Some(false) && t.status == "window-insufficient").count();
    let summary = json!({
        "trials": a.trials,
        "witnesses": count("witness") + count("hypothesis-not-met"),
        "window_insufficient": count("window-insufficient"),
        "hypothesis_not_met": trials.iter().filter(|t| t.hypothesis_holds == Some(false)).count(),
        "guaranteed": guaranteed,
        "guaranteed_failures": guaranteed_failures,
    });
    let code = if guaranteed_failures > 0 { 3 } else { 0 };
    Ok((code, json!({ "summary": summary, "trials": to_value(&trials) })))
}

fn status_for(holds: Option<bool>) -> &'static str {
    match holds {
        Some(false) => "hypothesis-not-met",
        _ => "witness",
    }
}

fn reindex(t: &Transform, eps: &Rational, seed: u64, cap: u32) -> Result<(i32, Value)> {
    let (cover, details) = match t {
        Transform::Thin { input, k } => {
            let out = thin_reindex(&read_cover(input)?, eps, *k)?;
            (out, Value::Null)
        }
        Transform::Union { input } => {
            let covers = input.iter().map(read_cover).collect::<Result<Vec<_>>>()?;
            let u = union_reindex_mprime(&covers)?;
            (u.cover.clone(), json!({ "parts": to_value(&u.parts), "disjoint_upto": u.disjoint_upto }))
        }
        Transform::Ln { avoid, m, count, window } => {
            let avoid = parse_omega_set(avoid)?;
            let factory = |eps_m: &Rational| seeded_ln_cover(eps_m, seed, 200);
            let r = reindex_ln_avoid(factory, &avoid, eps, *m, *count, *window)?;
            (r.cover.clone(), to_value(&r))
        }
        Transform::Density { input, avoid, m } => {
            let r = reindex_density_avoid(&read_cover(input)?, &parse_omega_set(avoid)?, eps, *m)?;
            (r.cover.clone(), to_value(&r))
        }
    };
    let report = validate(&cover, cap);
    Ok((validation_code(&report), json!({ "cover": to_value(&cover), "details": details, "validation": to_value(&report) })))
}

/// An `ω`-indexed logarithmic cover at seeded positions in `[0, 1]`.
fn seeded_ln_cover(eps_m: &Rational, seed: u64, len: u64) -> Result<CoverAttempt> {
    let c = Constraint::logarithmic(eps_m.clone());
    let mut rng = trial_rng(seed, u64::MAX);
    let entries: Vec<(u64, Interval)> = (0..len)
        .map(|n| {
            let lo = Rational::frac(rng.gen_range(0..1 << 30), 1 << 30);
            (n, Interval::with_length(lo, &c.safe_length(n)))
        })
        .collect();
    Ok(CoverAttempt::new(OmegaSet::all(), c, len - 1, entries))
}
