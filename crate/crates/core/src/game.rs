//! The multi-round complement sampling game.
//!
//! Each round the referee draws a keyed permutation `P`, sets
//! `S = {P(0‖i)}`, hands the player `j` samples of `S` (classical draws with
//! replacement, or copies of `|S⟩`), and accepts a candidate `ŷ` iff the
//! leading bit of `P⁻¹(ŷ)` is 1.
//!
//! Transcripts are JSON lines: a header carrying the [`GameConfig`], one
//! record per round, and a closing summary. Every round record carries an
//! HMAC-SHA256 tag keyed by the configuration, so a verifier that holds the
//! configuration detects edits to any field, including candidate bit flips
//! that happen to leave the verdict unchanged.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use hmac::{Hmac, KeyInit, Mac};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prp::{
    make_prp_oracle, make_random_oracle, subset_from_permutation, verify_complement,
    PermutationOracle, SaesKey, MAX_TABLE_BITS, SAES_BITS,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::simulator::StateVector;
use crate::subsetstates::{make_subset_state, parse_hex};
use crate::swappers::{coupon_collector_sample, zero_error_swap_with_cardinality};
use crate::classical::{guess_from_samples, GuessPolicy};

const REFEREE_STREAM: u64 = 1;
const PLAYER_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayerKind {
    QuantumComplement,
    QuantumZeroError,
    ClassicalRandomGuess,
    CouponCollector,
}

impl PlayerKind {
    pub const ALL: [PlayerKind; 4] = [
        PlayerKind::QuantumComplement,
        PlayerKind::QuantumZeroError,
        PlayerKind::ClassicalRandomGuess,
        PlayerKind::CouponCollector,
    ];

    pub fn is_quantum(self) -> bool {
        !matches!(self, PlayerKind::ClassicalRandomGuess)
    }

    pub fn name(self) -> &'static str {
        match self {
            PlayerKind::QuantumComplement => "quantum_complement",
            PlayerKind::QuantumZeroError => "quantum_zero_error",
            PlayerKind::ClassicalRandomGuess => "classical_random_guess",
            PlayerKind::CouponCollector => "coupon_collector",
        }
    }
}

impl fmt::Display for PlayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        PlayerKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown player {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Saes,
    RandomTable,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Saes => "saes",
            Backend::RandomTable => "random_table",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "saes" => Ok(Backend::Saes),
            "random_table" => Ok(Backend::RandomTable),
            _ => Err(Error::Parse(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n: usize,
    pub rounds: usize,
    pub samples_per_round: usize,
    pub player: PlayerKind,
    pub backend: Backend,
    pub master_seed: u64,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_TABLE_BITS {
            return Err(Error::Scale(format!("n = {} not in 1..={MAX_TABLE_BITS}", self.n)));
        }
        if self.backend == Backend::Saes && self.n != SAES_BITS {
            return Err(Error::OutOfRange(format!(
                "the saes backend requires n = {SAES_BITS}, got {}",
                self.n
            )));
        }
        if self.rounds == 0 {
            return Err(Error::OutOfRange("rounds must be >= 1".into()));
        }
        if self.samples_per_round == 0 {
            return Err(Error::OutOfRange("samples per round must be >= 1".into()));
        }
        Ok(())
    }

    pub fn universe(&self) -> usize {
        1 << self.n
    }

    /// Pass mark for the summary: `1/2 + 1/n`.
    pub fn threshold(&self) -> f64 {
        0.5 + 1.0 / self.n as f64
    }

    fn round_seed(&self, round: usize) -> u64 {
        derive_seed(self.master_seed, round as u64)
    }

    fn instance(&self, round: usize) -> Instance {
        let seed = self.round_seed(round);
        match self.backend {
            Backend::Saes => Instance::Saes(SaesKey(seed as u16)),
            Backend::RandomTable => Instance::Table(seed),
        }
    }

    fn tag_key(&self) -> [u8; 32] {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(b"complement-sampling transcript tag v1\0");
        h.update(&canonical);
        h.finalize().into()
    }
}

/// Which permutation a round used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instance {
    Saes(SaesKey),
    Table(u64),
}

impl Instance {
    pub fn oracle(self, n: usize) -> Result<PermutationOracle> {
        match self {
            Instance::Saes(key) => Ok(make_prp_oracle(key)),
            Instance::Table(seed) => make_random_oracle(n, seed),
        }
    }
}

/// What the referee hands the player.
#[derive(Debug, Clone)]
pub enum Payload {
    /// Uniform draws from `S`, with replacement.
    Classical { n: usize, samples: Vec<usize> },
    /// `copies` independent copies of `|S⟩`. Copies are identical, so one
    /// statevector is stored and each use consumes a copy.
    Quantum { state: StateVector, copies: usize },
}

impl Payload {
    pub fn n(&self) -> usize {
        match self {
            Payload::Classical { n, .. } => *n,
            Payload::Quantum { state, .. } => state.n_qubits(),
        }
    }
}

/// The referee's private side of a round.
#[derive(Debug, Clone)]
pub struct RoundVerifier {
    oracle: PermutationOracle,
}

impl RoundVerifier {
    pub fn verify(&self, candidate: usize) -> bool {
        verify_complement(&self.oracle, candidate)
    }

    pub fn oracle(&self) -> &PermutationOracle {
        &self.oracle
    }
}

#[derive(Debug, Clone)]
pub struct RefereeRound {
    pub instance: Instance,
    pub payload: Payload,
    pub verifier: RoundVerifier,
}

fn classical_samples(config: &GameConfig, round: usize, oracle: &PermutationOracle) -> Vec<usize> {
    let mut rng = rng_from_seed(derive_seed(config.round_seed(round), REFEREE_STREAM));
    let half = oracle.universe() / 2;
    (0..config.samples_per_round)
        .map(|_| oracle.forward(rng.random_range(0..half)))
        .collect()
}

/// Sets up round `round`: derives the permutation and prepares the samples.
pub fn referee_round(config: &GameConfig, round: usize) -> Result<RefereeRound> {
    config.validate()?;
    let instance = config.instance(round);
    let oracle = instance.oracle(config.n)?;
    let payload = if config.player.is_quantum() {
        Payload::Quantum {
            state: make_subset_state(&subset_from_permutation(&oracle)),
            copies: config.samples_per_round,
        }
    } else {
        Payload::Classical {
            n: config.n,
            samples: classical_samples(config, round, &oracle),
        }
    };
    Ok(RefereeRound {
        instance,
        payload,
        verifier: RoundVerifier { oracle },
    })
}

/// The player's answer. All players know `K = N/2` and nothing else about `S`.
pub fn play_round<R: Rng + ?Sized>(payload: &Payload, kind: PlayerKind, rng: &mut R) -> Result<usize> {
    let universe = 1usize << payload.n();
    match (payload, kind) {
        (Payload::Classical { samples, .. }, PlayerKind::ClassicalRandomGuess) => {
            Ok(guess_from_samples(samples, universe, GuessPolicy::Unseen, rng))
        }
        (Payload::Quantum { state, .. }, PlayerKind::QuantumComplement) => {
            let mut out = state.clone();
            out.diffusion();
            Ok(out.measure_all(rng))
        }
        (Payload::Quantum { state, copies }, PlayerKind::QuantumZeroError) => {
            for _ in 0..*copies {
                let attempt = zero_error_swap_with_cardinality(state, universe / 2, rng)?;
                if let Some(y) = attempt.sample {
                    return Ok(y);
                }
            }
            Ok(rng.random_range(0..universe))
        }
        (Payload::Quantum { state, .. }, PlayerKind::CouponCollector) => {
            coupon_collector_sample(state, rng)
        }
        (Payload::Classical { .. }, k) => Err(Error::PayloadMismatch(format!(
            "{k} needs quantum samples, got classical ones"
        ))),
        (Payload::Quantum { .. }, k) => Err(Error::PayloadMismatch(format!(
            "{k} needs classical samples, got quantum ones"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_hex: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<String>>,
    pub payload_digest: String,
    pub candidate_hex: String,
    pub verdict: u8,
    pub tag: String,
}

impl RoundRecord {
    fn canonical_bytes(&self) -> Vec<u8> {
        let samples = self.samples.as_ref().map(|s| s.join(","));
        format!(
            "{}|{}|{}|{}|{}|{}|{}",
            self.round,
            self.key_hex.as_deref().unwrap_or("-"),
            self.perm_seed.map_or("-".to_string(), |s| s.to_string()),
            samples.as_deref().unwrap_or("-"),
            self.payload_digest,
            self.candidate_hex,
            self.verdict
        )
        .into_bytes()
    }

    fn compute_tag(&self, key: &[u8; 32]) -> String {
        let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("any key length");
        mac.update(&self.canonical_bytes());
        hex::encode(mac.finalize().into_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub wins: usize,
    pub rounds: usize,
    pub all_won: bool,
    pub win_rate: f64,
    pub threshold: f64,
    pub threshold_met: bool,
}

impl GameSummary {
    fn from_records(config: &GameConfig, records: &[RoundRecord]) -> Self {
        let wins = records.iter().filter(|r| r.verdict == 1).count();
        let rounds = records.len();
        let win_rate = if rounds == 0 { 0.0 } else { wins as f64 / rounds as f64 };
        Self {
            wins,
            rounds,
            all_won: wins == rounds,
            win_rate,
            threshold: config.threshold(),
            threshold_met: win_rate >= config.threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub config: GameConfig,
    pub records: Vec<RoundRecord>,
    pub summary: GameSummary,
}

fn hex_width(n: usize) -> usize {
    n.div_ceil(4).max(1)
}

fn format_string(x: usize, n: usize) -> String {
    format!("{x:0w$x}", w = hex_width(n))
}

fn payload_digest(config: &GameConfig, instance: Instance, samples: Option<&[usize]>) -> String {
    let mut h = Sha256::new();
    match samples {
        Some(samples) => {
            h.update(b"classical\0");
            h.update((config.n as u32).to_le_bytes());
            for &s in samples {
                h.update((s as u32).to_le_bytes());
            }
        }
        // The state is determined by the instance; committing to the
        // instance keeps verification independent of the state size.
        None => {
            h.update(b"subset-state\0");
            h.update((config.n as u32).to_le_bytes());
            h.update((config.samples_per_round as u64).to_le_bytes());
            match instance {
                Instance::Saes(k) => h.update(k.0.to_le_bytes()),
                Instance::Table(seed) => h.update(seed.to_le_bytes()),
            }
        }
    }
    hex::encode(h.finalize())
}

fn instance_fields(instance: Instance) -> (Option<String>, Option<u64>) {
    match instance {
        Instance::Saes(k) => (Some(k.to_string()), None),
        Instance::Table(seed) => (None, Some(seed)),
    }
}

/// Plays all rounds and records the transcript.
pub fn run_game(config: &GameConfig) -> Result<GameTranscript> {
    config.validate()?;
    let key = config.tag_key();
    let mut records = Vec::with_capacity(config.rounds);
    for round in 0..config.rounds {
        let rr = referee_round(config, round)?;
        let mut player_rng = rng_from_seed(derive_seed(config.round_seed(round), PLAYER_STREAM));
        let candidate = play_round(&rr.payload, config.player, &mut player_rng)?;
        let verdict = rr.verifier.verify(candidate) as u8;
        let samples = match &rr.payload {
            Payload::Classical { samples, .. } => Some(samples.as_slice()),
            Payload::Quantum { .. } => None,
        };
        let (key_hex, perm_seed) = instance_fields(rr.instance);
        let mut record = RoundRecord {
            round,
            key_hex,
            perm_seed,
            samples: samples.map(|s| s.iter().map(|&x| format_string(x, config.n)).collect()),
            payload_digest: payload_digest(config, rr.instance, samples),
            candidate_hex: format_string(candidate, config.n),
            verdict,
            tag: String::new(),
        };
        record.tag = record.compute_tag(&key);
        records.push(record);
    }
    let summary = GameSummary::from_records(config, &records);
    Ok(GameTranscript {
        config: *config,
        records,
        summary,
    })
}

/// Outcome of checking a transcript, with one line per discrepancy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub mismatches: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-derives every round from `config` and checks each stored field.
///
/// Errors only on malformed content (bad hex, verdicts other than 0/1);
/// consistent-but-wrong content is reported as mismatches.
pub fn verify_transcript_report(transcript: &GameTranscript, config: &GameConfig) -> Result<VerifyReport> {
    config.validate()?;
    let mut bad = Vec::new();
    if transcript.config != *config {
        bad.push("transcript header does not match the configuration".to_string());
    }
    if transcript.records.len() != config.rounds {
        bad.push(format!(
            "expected {} round records, found {}",
            config.rounds,
            transcript.records.len()
        ));
    }
    let key = config.tag_key();
    for (pos, rec) in transcript.records.iter().enumerate() {
        bad.extend(check_record(config, &key, pos, rec)?);
    }
    if transcript.summary != GameSummary::from_records(config, &transcript.records) {
        bad.push("summary does not match the round records".to_string());
    }
    Ok(VerifyReport { mismatches: bad })
}

/// Checks one stored round against `config`, as [`verify_transcript_report`] does
/// for each record. Returns the mismatches found.
pub fn verify_record(config: &GameConfig, position: usize, record: &RoundRecord) -> Result<Vec<String>> {
    config.validate()?;
    check_record(config, &config.tag_key(), position, record)
}

fn check_record(config: &GameConfig, key: &[u8; 32], pos: usize, rec: &RoundRecord) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    if rec.verdict > 1 {
        return Err(Error::Transcript(format!("round {pos}: verdict {} is not a bit", rec.verdict)));
    }
    let candidate = parse_hex(&rec.candidate_hex)
        .map_err(|e| Error::Transcript(format!("round {pos}: candidate: {e}")))?;
    if rec.round != pos {
        bad.push(format!("record {pos} is labelled round {}", rec.round));
    }
    let instance = config.instance(pos);
    let (key_hex, perm_seed) = instance_fields(instance);
    if rec.key_hex != key_hex || rec.perm_seed != perm_seed {
        bad.push(format!("round {pos}: permutation does not match the master seed"));
    }
    let oracle = instance.oracle(config.n)?;
    let expected_samples = (!config.player.is_quantum()).then(|| classical_samples(config, pos, &oracle));
    let stored_samples = rec
        .samples
        .as_ref()
        .map(|s| s.iter().map(|h| parse_hex(h)).collect::<Result<Vec<_>>>())
        .transpose()
        .map_err(|e| Error::Transcript(format!("round {pos}: samples: {e}")))?;
    if stored_samples != expected_samples {
        bad.push(format!("round {pos}: samples differ from the referee's draws"));
    }
    if rec.payload_digest != payload_digest(config, instance, expected_samples.as_deref()) {
        bad.push(format!("round {pos}: payload digest mismatch"));
    }
    if candidate >= config.universe() {
        bad.push(format!("round {pos}: candidate {candidate:#x} outside the universe"));
    } else if verify_complement(&oracle, candidate) as u8 != rec.verdict {
        bad.push(format!("round {pos}: stored verdict {} disagrees with recomputation", rec.verdict));
    }
    if rec.tag != rec.compute_tag(key) {
        bad.push(format!("round {pos}: integrity tag mismatch"));
    }
    Ok(bad)
}

/// True iff every stored verdict, sample list, digest and tag re-derives from `config`.
pub fn verify_transcript(transcript: &GameTranscript, config: &GameConfig) -> Result<bool> {
    Ok(verify_transcript_report(transcript, config)?.ok())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header { config: GameConfig },
    Round(RoundRecord),
    Summary(GameSummary),
}

/// Writes the JSON-lines form: header, rounds, summary.
pub fn write_transcript<W: Write>(transcript: &GameTranscript, mut out: W) -> Result<()> {
    let mut emit = |line: &Line| -> Result<()> {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
        Ok(())
    };
    emit(&Line::Header {
        config: transcript.config,
    })?;
    for r in &transcript.records {
        emit(&Line::Round(r.clone()))?;
    }
    emit(&Line::Summary(transcript.summary.clone()))?;
    out.flush()?;
    Ok(())
}

pub fn read_transcript<R: BufRead>(input: R) -> Result<GameTranscript> {
    let mut config = None;
    let mut records = Vec::new();
    let mut summary = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line)
            .map_err(|e| Error::Transcript(format!("line {}: {e}", i + 1)))?;
        match (parsed, config.is_some(), summary.is_some()) {
            (Line::Header { config: c }, false, _) => config = Some(c),
            (_, false, _) => return Err(Error::Transcript("first record must be the header".into())),
            (_, _, true) => return Err(Error::Transcript("records after the summary".into())),
            (Line::Header { .. }, true, _) => return Err(Error::Transcript("duplicate header".into())),
            (Line::Round(r), true, false) => records.push(r),
            (Line::Summary(s), true, false) => summary = Some(s),
        }
    }
    Ok(GameTranscript {
        config: config.ok_or_else(|| Error::Transcript("empty transcript".into()))?,
        records,
        summary: summary.ok_or_else(|| Error::Transcript("missing summary record".into()))?,
    })
}
