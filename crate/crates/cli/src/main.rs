//! `oneshot`: state generation, entropies, smooth entropies, chain-rule checks, the reversed-rule
//! counterexample and the invariant suites, all with JSON output.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use oneshot::chain::{
    counterexample_report, default_h, evaluate_all_with, write_csv, SmoothingParams, TermCache, Tripartite,
};
use oneshot::entropy::{self, EntropyValue};
use oneshot::operator::io::{read_state_file, write_state_file, StateFile};
use oneshot::operator::{random_state, QuantumState, Split, SystemLayout};
use oneshot::smoothing::{smooth_hmax_with, smooth_hmin_with, SmoothOptions};
use oneshot::verify::{run_suite, Suite, VerifyOptions};
use oneshot::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "oneshot", version, about = "One-shot conditional entropies and chain-rule checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random state to a state file.
    StateGen {
        /// Factor dimensions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Factor labels, comma separated (default A, B, C, ...).
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
        /// Rank of the state (default: full).
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Non-smooth entropy of a stored state.
    Entropy {
        #[arg(long, value_enum)]
        kind: EntropyKind,
        #[arg(long)]
        state: PathBuf,
        /// Split such as `A|BC` or `A1,A2|B`.
        #[arg(long)]
        split: String,
        /// Conditioning state for the relative entropies and the S-entropy.
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Radius of the S-entropy.
        #[arg(long)]
        eps: Option<f64>,
        /// Evaluate hmax-rel through its SDP rather than the closed form.
        #[arg(long)]
        sdp: bool,
    },
    /// ε-smooth min- or max-entropy of a stored state.
    Smooth {
        #[arg(long, value_enum)]
        kind: SmoothKind,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        split: String,
        #[arg(long)]
        eps: f64,
        /// Basis vectors added by direct sum to the first factor of each side.
        #[arg(long, default_value_t = 0)]
        extra_dim: usize,
    },
    /// Evaluate the eight chain rules and the non-smooth corollary on a stored state.
    ChainCheck {
        #[arg(long)]
        state: PathBuf,
        /// Smoothing parameters `ε,ε′,ε″,ε‴`.
        #[arg(long)]
        params: String,
        /// Systems as `A|B|C`.
        #[arg(long, default_value = "A|B|C")]
        systems: String,
        /// Write one CSV row per rule here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build and evaluate the reversed-rule counterexample.
    Counterexample {
        #[arg(long)]
        d: usize,
        /// Error term of the reversed rule (default 4f(0.3)).
        #[arg(long)]
        h: Option<f64>,
        /// Also evaluate smooth entropies at `ε,ε′,ε″` (d = 2 only).
        #[arg(long)]
        smooth: Option<String>,
    },
    /// Run the randomized invariant suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplier on the default trial counts.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EntropyKind {
    Hmin,
    Hmax,
    HminRel,
    HmaxRel,
    S,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothKind {
    Hmin,
    Hmax,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Operator,
    Sdp,
    Entropy,
    Smoothing,
    Chain,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Operator => Suite::Operator,
            SuiteArg::Sdp => Suite::Sdp,
            SuiteArg::Entropy => Suite::Entropy,
            SuiteArg::Smoothing => Suite::Smoothing,
            SuiteArg::Chain => Suite::Chain,
        }
    }
}

/// Failure of a verb: the exit code and the JSON written to standard error.
struct Failure {
    code: u8,
    body: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_VALIDATION };
        Failure { code, body: json!({ "error": e.kind(), "message": e.to_string() }) }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_VALIDATION, body: json!({ "error": "invalid-argument", "message": msg.into() }) }
}

/// Rounds floats to 6 decimals, or 6 significant digits below 1e-6.
fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r = if x.abs() >= 1e-6 || x == 0.0 {
                (x * 1e6).round() / 1e6
            } else {
                format!("{x:.5e}").parse().expect("formatted float")
            };
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, round_numbers(x))).collect()),
        other => other,
    }
}

/// Writes one line of JSON to standard output; a closed pipe is not an error.
fn emit(v: Value) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string(&round_numbers(v))?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e).into()),
        _ => Ok(()),
    }
}

fn load_file(path: &PathBuf) -> Result<(QuantumState, StateFile), Failure> {
    read_state_file(path).map_err(|e| {
        let mut f = Failure::from(e);
        f.body["path"] = json!(path.display().to_string());
        f
    })
}

fn load(path: &PathBuf) -> Result<QuantumState, Failure> {
    Ok(load_file(path)?.0)
}

fn entropy_json(v: &EntropyValue) -> Result<Value, Failure> {
    Ok(serde_json::to_value(v)?)
}

fn state_gen(
    dims: Vec<usize>,
    labels: Option<Vec<String>>,
    rank: Option<usize>,
    seed: u64,
    output: PathBuf,
) -> Result<(), Failure> {
    let labels = match labels {
        Some(l) if l.len() != dims.len() => {
            return Err(invalid(format!("{} labels for {} factors", l.len(), dims.len())));
        }
        Some(l) => l,
        None if dims.len() > 26 => return Err(invalid("more than 26 factors need explicit labels")),
        None => (0..dims.len()).map(|k| ((b'A' + k as u8) as char).to_string()).collect(),
    };
    let layout = SystemLayout::new(labels.into_iter().zip(dims))?;
    let rank = rank.unwrap_or(layout.dim());
    if rank == 0 || rank > layout.dim() {
        return Err(invalid(format!("rank {rank} outside 1..={}", layout.dim())));
    }
    let rho = random_state(&layout, rank, seed)?;
    let file = StateFile::from_state(&rho, Some(seed), Some(format!("random state of rank {rank}")));
    write_state_file(&output, &file)?;
    emit(json!({
        "path": output.display().to_string(),
        "factors": serde_json::to_value(layout.factors())?,
        "rank": rank,
        "seed": seed,
        "trace": rho.trace(),
    }))
}

fn entropy_verb(
    kind: EntropyKind,
    state: PathBuf,
    split: String,
    sigma: Option<PathBuf>,
    eps: Option<f64>,
    sdp: bool,
) -> Result<(), Failure> {
    let split = Split::parse(&split)?;
    let needs_sigma = matches!(kind, EntropyKind::HminRel | EntropyKind::HmaxRel | EntropyKind::S);
    if needs_sigma && sigma.is_none() {
        return Err(invalid("this kind needs --sigma"));
    }
    if !needs_sigma && sigma.is_some() {
        return Err(invalid("--sigma applies only to hmin-rel, hmax-rel and s"));
    }
    if matches!(kind, EntropyKind::S) != eps.is_some() {
        return Err(invalid("--eps is required for, and only for, the S-entropy"));
    }
    if sdp && !matches!(kind, EntropyKind::HmaxRel) {
        return Err(invalid("--sdp applies only to hmax-rel"));
    }
    let rho = load(&state)?;
    split.check(rho.layout())?;
    let sigma = sigma.as_ref().map(load).transpose()?;
    let value = match (kind, sigma) {
        (EntropyKind::Hmin, _) => entropy::hmin_auto(&rho, &split)?,
        (EntropyKind::Hmax, _) => entropy::hmax(&rho, &split)?,
        (EntropyKind::HminRel, Some(s)) => entropy::hmin_rel(&rho, &s, &split)?,
        (EntropyKind::HmaxRel, Some(s)) if sdp => entropy::hmax_rel_sdp(&rho, &s, &split)?,
        (EntropyKind::HmaxRel, Some(s)) => entropy::hmax_rel(&rho, &s, &split)?,
        (EntropyKind::S, Some(s)) => entropy::s_entropy(&rho, &s, &split, eps.expect("checked"))?,
        _ => unreachable!("σ presence checked above"),
    };
    emit(entropy_json(&value)?)
}

fn smooth_verb(kind: SmoothKind, state: PathBuf, split: String, eps: f64, extra_dim: usize) -> Result<(), Failure> {
    let split = Split::parse(&split)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid(format!("--eps {eps} outside [0, 1)")));
    }
    let rho = load(&state)?;
    split.check(rho.layout())?;
    let opts = SmoothOptions { extra_dim };
    let r = match kind {
        SmoothKind::Hmin => smooth_hmin_with(&rho, &split, eps, &opts)?,
        SmoothKind::Hmax => smooth_hmax_with(&rho, &split, eps, &opts)?,
    };
    emit(serde_json::to_value(&r)?)
}

fn chain_check(state: PathBuf, params: String, systems: String, csv: Option<PathBuf>) -> Result<(), Failure> {
    let params = SmoothingParams::parse(&params)?;
    let systems = Tripartite::parse(&systems)?;
    let (rho, file) = load_file(&state)?;
    let seed = file.seed;
    let report = evaluate_all_with(&rho, &systems, &params, seed, &mut TermCache::default())?;
    if let Some(path) = &csv {
        let file = std::fs::File::create(path).map_err(Error::from)?;
        write_csv(std::slice::from_ref(&report), file)?;
    }
    emit(serde_json::to_value(&report)?)
}

fn parse_triple(text: &str) -> Result<(f64, f64, f64), Failure> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| invalid(format!("bad smoothing parameter `{s}`"))))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b, c] => Ok((*a, *b, *c)),
        _ => Err(invalid(format!("expected three smoothing parameters, got {}", v.len()))),
    }
}

fn counterexample(d: usize, h: Option<f64>, smooth: Option<String>) -> Result<(), Failure> {
    if d < 2 {
        return Err(invalid("--d must be at least 2"));
    }
    if let Some(h) = h {
        if !h.is_finite() {
            return Err(invalid("--h must be finite"));
        }
    }
    let smooth = smooth.as_deref().map(parse_triple).transpose()?;
    let rep = counterexample_report(d, h.unwrap_or_else(default_h), smooth)?;
    emit(serde_json::to_value(&rep)?)
}

fn verify(suite: SuiteArg, seed: u64, scale: f64) -> Result<(), Failure> {
    let rep = run_suite(suite.into(), &VerifyOptions { seed, scale })?;
    let body = serde_json::to_value(&rep)?;
    if rep.passed {
        emit(body)
    } else {
        emit(body)?;
        Err(Failure {
            code: EXIT_INVARIANT,
            body: json!({ "error": "invariant", "message": format!("{} check(s) failed", rep.failed_checks) }),
        })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::StateGen { dims, labels, rank, seed, output } => state_gen(dims, labels, rank, seed, output),
        Command::Entropy { kind, state, split, sigma, eps, sdp } => entropy_verb(kind, state, split, sigma, eps, sdp),
        Command::Smooth { kind, state, split, eps, extra_dim } => smooth_verb(kind, state, split, eps, extra_dim),
        Command::ChainCheck { state, params, systems, csv } => chain_check(state, params, systems, csv),
        Command::Counterexample { d, h, smooth } => counterexample(d, h, smooth),
        Command::Verify { suite, seed, scale } => verify(suite, seed, scale),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({ "error": "usage", "message": e.render().to_string().trim_end() });
            eprintln!("{body}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.body);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        let solver = Error::Solver { status: "max-iterations".into(), message: "stalled".into() };
        assert_eq!(Failure::from(solver).code, EXIT_SOLVER);
        assert_eq!(Failure::from(Error::InvalidArgument("x".into())).code, EXIT_VALIDATION);
    }

    #[test]
    fn rounding_keeps_small_magnitudes() {
        let v = round_numbers(json!({ "a": 1.23456789, "b": 1.23456789e-9, "c": [0.0, -2.0000004] }));
        assert_eq!(v, json!({ "a": 1.234568, "b": 1.23457e-9, "c": [0.0, -2.0] }));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
