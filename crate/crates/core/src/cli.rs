//! The `csamp` command line.
//!
//! Exit codes: 0 success or verified, 1 verification failure, 2 usage error,
//! 3 scale or range error. With `--out`, a `<out>.manifest.json` file records
//! the command, every parameter, the seed, the crate version and the SHA-256
//! of each output, so each artifact can be regenerated and checked.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::classical::{lower_bound_queries_exact, sample_complexity_success_exact, MAX_DRAWS};
use crate::error::{Error, Result};
use crate::game::{
    read_transcript, run_game, verify_transcript_report, write_transcript, Backend, GameConfig,
    GameTranscript, PlayerKind,
};
use crate::prp::{saes_decrypt, saes_encrypt, parse_hex16, SaesKey};
use crate::swappers::{admissible_betas, cardinality_for_beta, success_curves, write_curves_csv, CurveRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RANGE: i32 = 3;

/// Largest `n` for `sweep-beta`.
pub const MAX_SWEEP_BITS: usize = 12;

/// Largest `n` for `bounds` (exact arithmetic on `2^n`).
pub const MAX_BOUNDS_BITS: usize = 62;

pub const BOUNDS_CSV_HEADER: &str = "kind,N,K,delta,d,exact,value";

#[derive(Debug, Parser)]
#[command(name = "csamp", version, about = "Complement sampling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-sample success of the four strategies for every admissible β.
    SweepBeta(SweepArgs),
    /// Classical query lower bound across K and sample-complexity success across d.
    Bounds(BoundsArgs),
    /// Plays the multi-round referee/player game and writes a transcript.
    Game(GameArgs),
    /// Re-derives a transcript from its configuration.
    Verify(VerifyArgs),
    /// S-AES on one 16-bit block.
    Saes(SaesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: usize,
    /// Monte Carlo shots per row; 0 gives analytic columns only.
    #[arg(long, default_value_t = 0)]
    pub trials: usize,
    /// Comma-separated β values; default is every β with integral K.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: usize,
    /// Subset size; default sweeps K over multiples of N/16 (all K for n < 4).
    #[arg(long, conflicts_with = "beta")]
    pub k: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Advantage δ in [0, 1/2], as a fraction `p/q` or a decimal.
    #[arg(long, default_value = "1/6")]
    pub delta: String,
    /// Largest number of draws in the sample-complexity sweep.
    #[arg(long, default_value_t = 16)]
    pub d: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct GameArgs {
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    /// Samples per round (`j`).
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[arg(long, default_value = "quantum_complement")]
    pub player: PlayerKind,
    #[arg(long, default_value = "saes")]
    pub backend: Backend,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Transcript file in JSON-lines or single-document JSON form.
    pub transcript: PathBuf,
    /// Master seed the referee used; defaults to the one in the header.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Encrypt,
    Decrypt,
}

#[derive(Debug, Args, Serialize)]
pub struct SaesArgs {
    /// 4 hex digits.
    #[arg(long)]
    pub key: String,
    /// 4 hex digits.
    #[arg(long)]
    pub block: String,
    #[arg(long, value_enum, default_value_t = Direction::Encrypt)]
    pub direction: Direction,
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Scale(_)
        | Error::ParameterRange { .. }
        | Error::OutOfRange(_)
        | Error::NonIntegralCardinality { .. } => EXIT_RANGE,
        Error::Transcript(_) | Error::PayloadMismatch(_) | Error::Json(_) => EXIT_VERIFY_FAILED,
        Error::Parse(_) | Error::Io(_) | Error::InvalidSubset(_) => EXIT_USAGE,
        _ => EXIT_RANGE,
    }
}

/// Parses `p/q`, an integer, or a plain decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let scale = BigInt::from(10).pow(frac.len() as u32);
    let r = BigRational::new(digits, scale);
    Ok(if neg { -r } else { r })
}

#[derive(Serialize)]
struct OutputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a, P: Serialize> {
    command: &'a str,
    parameters: &'a P,
    master_seed: Option<u64>,
    version: &'a str,
    outputs: Vec<OutputDigest>,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes `bytes` to `out` (or stdout) and, for files, the manifest beside it.
fn emit<P: Serialize>(
    command: &str,
    params: &P,
    seed: Option<u64>,
    out: Option<&Path>,
    bytes: &[u8],
    stdout: &mut dyn Write,
) -> Result<()> {
    let Some(path) = out else {
        stdout.write_all(bytes)?;
        return Ok(());
    };
    fs::write(path, bytes)?;
    let manifest = RunManifest {
        command,
        parameters: params,
        master_seed: seed,
        version: env!("CARGO_PKG_VERSION"),
        outputs: vec![OutputDigest {
            path: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }],
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    fs::write(manifest_path(path), text)?;
    Ok(())
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn curves_json(rows: &[CurveRow], trials: usize, seed: u64) -> Result<Vec<u8>> {
    let rows: Vec<_> = rows
        .iter()
        .map(|r| {
            let a = r.analytic;
            json!({
                "beta": r.beta,
                "K": r.k,
                "analytic": {"cs": a.cs, "ze": a.ze, "cc": a.cc, "cl": a.cl},
                "simulated": r.simulated.map(|s| json!({"cs": s.cs, "ze": s.ze, "cc": s.cc, "cl": s.cl})),
            })
        })
        .collect();
    let mut v = serde_json::to_vec_pretty(&json!({"trials": trials, "seed": seed, "rows": rows}))?;
    v.push(b'\n');
    Ok(v)
}

fn cmd_sweep_beta(args: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    if args.n == 0 || args.n > MAX_SWEEP_BITS {
        return Err(usage(format!("--n must be in 1..={MAX_SWEEP_BITS}, got {}", args.n)));
    }
    let universe = 1usize << args.n;
    let betas = if args.beta.is_empty() {
        admissible_betas(universe)
    } else {
        args.beta.clone()
    };
    let rows = success_curves(&betas, universe, args.trials, args.seed)?;
    let bytes = match args.format {
        Format::Csv => {
            let mut v = Vec::new();
            write_curves_csv(&rows, args.trials, args.seed, &mut v)?;
            v
        }
        Format::Json => curves_json(&rows, args.trials, args.seed)?,
        Format::Jsonl => return Err(usage("sweep-beta supports --format csv or json")),
    };
    emit("sweep-beta", args, Some(args.seed), args.out.as_deref(), &bytes, stdout)
}

#[derive(Serialize)]
struct BoundsRow {
    kind: &'static str,
    #[serde(rename = "N")]
    universe: u64,
    #[serde(rename = "K")]
    k: u64,
    delta: Option<String>,
    d: Option<u64>,
    exact: String,
    value: f64,
}

fn cmd_bounds(args: &BoundsArgs, stdout: &mut dyn Write) -> Result<()> {
    if args.n == 0 || args.n > MAX_BOUNDS_BITS {
        return Err(usage(format!("--n must be in 1..={MAX_BOUNDS_BITS}, got {}", args.n)));
    }
    if args.d == 0 || args.d > MAX_DRAWS {
        return Err(Error::OutOfRange(format!("--d must be in 1..={MAX_DRAWS}, got {}", args.d)));
    }
    let universe = 1u64 << args.n;
    let delta = parse_rational(&args.delta)?;
    let fixed_k = match (args.k, args.beta) {
        (Some(k), _) => Some(k),
        (None, Some(beta)) => Some(cardinality_for_beta(beta, universe as usize)? as u64),
        (None, None) => None,
    };
    let ks: Vec<u64> = match fixed_k {
        Some(k) => vec![k],
        None if args.n < 4 => (1..universe).collect(),
        None => (1..16).map(|m| m * (universe / 16)).collect(),
    };
    let mut rows = Vec::new();
    for &k in &ks {
        let lb = lower_bound_queries_exact(universe, k, &delta)?;
        rows.push(BoundsRow {
            kind: "lower_bound_queries",
            universe,
            k,
            delta: Some(delta.to_string()),
            d: None,
            value: lb.to_f64().unwrap_or(f64::NAN),
            exact: lb.to_string(),
        });
    }
    let sample_k = fixed_k.unwrap_or(universe / 2);
    for d in 1..=args.d {
        let p = sample_complexity_success_exact(universe, sample_k, d)?;
        rows.push(BoundsRow {
            kind: "sample_success",
            universe,
            k: sample_k,
            delta: None,
            d: Some(d),
            value: p.to_f64().unwrap_or(f64::NAN),
            exact: p.to_string(),
        });
    }
    let bytes = match args.format {
        Format::Csv => {
            let mut v = Vec::new();
            writeln!(v, "{BOUNDS_CSV_HEADER}")?;
            for r in &rows {
                writeln!(
                    v,
                    "{},{},{},{},{},{},{}",
                    r.kind,
                    r.universe,
                    r.k,
                    r.delta.as_deref().unwrap_or(""),
                    r.d.map(|d| d.to_string()).unwrap_or_default(),
                    r.exact,
                    r.value
                )?;
            }
            v
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(&rows)?;
            v.push(b'\n');
            v
        }
        Format::Jsonl => return Err(usage("bounds supports --format csv or json")),
    };
    emit("bounds", args, None, args.out.as_deref(), &bytes, stdout)
}

/// Wilson score interval at 95%.
pub fn wilson_interval(wins: usize, rounds: usize) -> (f64, f64) {
    if rounds == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = rounds as f64;
    let p = wins as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn summary_line(t: &GameTranscript) -> String {
    let s = &t.summary;
    let (lo, hi) = wilson_interval(s.wins, s.rounds);
    format!(
        "player={} backend={} n={} wins={} rounds={} win_rate={:.6} ci95=[{:.6},{:.6}] all_won={} threshold={:.6} threshold_met={}",
        t.config.player,
        t.config.backend,
        t.config.n,
        s.wins,
        s.rounds,
        s.win_rate,
        lo,
        hi,
        s.all_won,
        s.threshold,
        s.threshold_met
    )
}

fn cmd_game(args: &GameArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let config = GameConfig {
        n: args.n,
        rounds: args.rounds,
        samples_per_round: args.samples,
        player: args.player,
        backend: args.backend,
        master_seed: args.seed,
    };
    let transcript = run_game(&config)?;
    let mut bytes = Vec::new();
    match args.format {
        Format::Jsonl => write_transcript(&transcript, &mut bytes)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut bytes, &transcript)?;
            bytes.push(b'\n');
        }
        Format::Csv => return Err(usage("game supports --format jsonl or json")),
    }
    emit("game", args, Some(args.seed), args.out.as_deref(), &bytes, stdout)?;
    let line = summary_line(&transcript);
    if args.out.is_some() {
        writeln!(stdout, "{line}")?;
    } else {
        writeln!(stderr, "{line}")?;
    }
    Ok(())
}

fn load_transcript(path: &Path) -> Result<GameTranscript> {
    let text = fs::read(path)?;
    let first = text.iter().find(|b| !b.is_ascii_whitespace()).copied();
    // A single JSON document starts with '{' and spans lines; JSON lines
    // start with the header object on its own line.
    let as_document = serde_json::from_slice::<GameTranscript>(&text);
    match (first, as_document) {
        (Some(b'{'), Ok(t)) => Ok(t),
        _ => read_transcript(BufReader::new(text.as_slice())),
    }
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let transcript = match load_transcript(&args.transcript) {
        Ok(t) => t,
        Err(Error::Io(e)) => return Err(Error::Io(e)),
        Err(e) => {
            writeln!(stderr, "verification failed: {e}")?;
            return Ok(EXIT_VERIFY_FAILED);
        }
    };
    let mut config = transcript.config;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let report = match verify_transcript_report(&transcript, &config) {
        Ok(r) => r,
        Err(e) => {
            writeln!(stderr, "verification failed: {e}")?;
            return Ok(EXIT_VERIFY_FAILED);
        }
    };
    if report.ok() {
        writeln!(stdout, "verified {} rounds; {}", transcript.records.len(), summary_line(&transcript))?;
        Ok(EXIT_OK)
    } else {
        for m in &report.mismatches {
            writeln!(stderr, "mismatch: {m}")?;
        }
        writeln!(stderr, "verification failed: {} mismatches", report.mismatches.len())?;
        Ok(EXIT_VERIFY_FAILED)
    }
}

fn cmd_saes(args: &SaesArgs, stdout: &mut dyn Write) -> Result<()> {
    let key: SaesKey = args.key.parse()?;
    let block = parse_hex16(&args.block)?;
    let out = match args.direction {
        Direction::Encrypt => saes_encrypt(key, block),
        Direction::Decrypt => saes_decrypt(key, block),
    };
    writeln!(stdout, "{out:04x}")?;
    Ok(())
}

/// Runs a parsed command and returns the exit status.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::SweepBeta(a) => cmd_sweep_beta(a, stdout).map(|_| EXIT_OK),
        Command::Bounds(a) => cmd_bounds(a, stdout).map(|_| EXIT_OK),
        Command::Game(a) => cmd_game(a, stdout, stderr).map(|_| EXIT_OK),
        Command::Verify(a) => cmd_verify(a, stdout, stderr),
        Command::Saes(a) => cmd_saes(a, stdout).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            code
        }
    }
}

pub fn main_from_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_from_args(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_from_args(std::iter::once("csamp").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn rationals() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(parse_rational("1/6").unwrap(), r(1, 6));
        assert_eq!(parse_rational(" 2 / 4 ").unwrap(), r(1, 2));
        assert_eq!(parse_rational("0.5").unwrap(), r(1, 2));
        assert_eq!(parse_rational(".25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("3").unwrap(), r(3, 1));
        assert_eq!(parse_rational("-0.125").unwrap(), r(-1, 8));
        for bad in ["", "1/0", "a", "1.2.3", "1/x", ".", "1e3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn wilson_brackets_the_rate() {
        let (lo, hi) = wilson_interval(500, 1000);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!((hi - lo - 2.0 * 1.96 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-3);
        assert!((wilson_interval(10, 10).1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_rows_and_beta_zero() {
        let (code, out, _) = run_args(&["sweep-beta", "--n", "4"]);
        assert_eq!(code, 0);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines.len(), 16);
        let zero = lines.iter().find(|l| l.starts_with("0,")).unwrap();
        let cols: Vec<&str> = zero.split(',').collect();
        assert_eq!(cols[1], "8");
        let v: Vec<f64> = cols[2..6].iter().map(|c| c.parse().unwrap()).collect();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 1.0);
        assert_eq!(v[2], 0.5);
        assert!((v[3] - 8.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_args(&["sweep-beta", "--n", "13"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["sweep-beta", "--n", "4", "--beta", "0.01"]).0, EXIT_RANGE);
        assert_eq!(run_args(&["bounds", "--n", "4", "--delta", "0.7"]).0, EXIT_RANGE);
        assert_eq!(run_args(&["bounds", "--n", "4", "--delta", "x"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["game", "--n", "8", "--backend", "saes"]).0, EXIT_RANGE);
        assert_eq!(run_args(&["game", "--n", "24", "--backend", "random_table"]).0, EXIT_RANGE);
        assert_eq!(run_args(&["saes", "--key", "12", "--block", "0000"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["nonsense"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["game", "--player", "oracle"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn bounds_headline_number() {
        let (code, out, _) = run_args(&["bounds", "--n", "16", "--k", "32768", "--delta", "1/6", "--d", "3"]);
        assert_eq!(code, 0);
        let lines: Vec<_> = out.lines().collect();
        assert_eq!(lines[0], BOUNDS_CSV_HEADER);
        assert_eq!(lines[1], "lower_bound_queries,65536,32768,1/6,,16384,16384");
        assert_eq!(lines.len(), 1 + 1 + 3);
    }

    #[test]
    fn saes_reference() {
        let (code, out, _) = run_args(&["saes", "--key", "a73b", "--block", "6f6b"]);
        assert_eq!((code, out.as_str()), (0, "0738\n"));
        let (_, out, _) = run_args(&["saes", "--key", "A73B", "--block", "0738", "--direction", "decrypt"]);
        assert_eq!(out, "6f6b\n");
    }
}
