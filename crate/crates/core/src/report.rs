//! Versioned artifacts, run rows and confidence intervals.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Out, Word};
use crate::sampler::RunResult;

pub const FORMAT: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// z for a two-sided 99% interval.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Hex SHA-256 of the JSON encoding of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format: u32,
    pub version: String,
    pub kind: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub body: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new<C: Serialize>(kind: &str, config: &C, seed: Option<u64>, body: T) -> Self {
        Envelope {
            format: FORMAT,
            version: VERSION.into(),
            kind: kind.into(),
            config_hash: config_hash(config),
            seed,
            body,
        }
    }
}

/// Parse an envelope, rejecting unknown formats and kinds.
pub fn open<T: for<'de> Deserialize<'de>>(text: &str, kind: &str) -> Result<Envelope<T>> {
    let env: Envelope<T> =
        serde_json::from_str(text).map_err(|e| Error::Structural(format!("bad artifact: {e}")))?;
    if env.format != FORMAT {
        return Err(Error::Structural(format!(
            "artifact format {} is not {FORMAT}",
            env.format
        )));
    }
    if env.kind != kind {
        return Err(Error::Structural(format!(
            "expected a {kind} artifact, found {}",
            env.kind
        )));
    }
    Ok(env)
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One CSV/JSONL row per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance: String,
    pub z: usize,
    pub input: String,
    pub expected: String,
    pub seed: u64,
    pub p: f64,
    pub output: Out,
    pub aborted: bool,
    pub triggering_j: Option<usize>,
    pub votes: Option<u64>,
    /// Seconds; left empty unless timing was requested, so rows replay
    /// byte for byte.
    pub elapsed: Option<f64>,
}

impl RunRow {
    pub fn new(
        instance: &str,
        input: &Word,
        expected: Option<Out>,
        p: f64,
        r: &RunResult,
        elapsed: Option<f64>,
    ) -> Self {
        let first = r.triggers.first();
        RunRow {
            instance: instance.into(),
            z: r.z,
            input: input.to_string(),
            expected: expected.map_or_else(|| "outside".into(), |o| o.to_string()),
            seed: r.seed,
            p,
            output: r.output,
            aborted: r.aborted,
            triggering_j: first.map(|t| t.j),
            votes: first.map(|t| t.votes),
            elapsed,
        }
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[RunRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)
            .map_err(|e| Error::Structural(format!("csv: {e}")))?;
    }
    out.flush()
        .map_err(|e| Error::Structural(format!("csv: {e}")))?;
    Ok(())
}

pub fn write_jsonl<W: std::io::Write>(rows: &[RunRow], mut w: W) -> Result<()> {
    for r in rows {
        let line = serde_json::to_string(r).expect("rows serialize");
        writeln!(w, "{line}").map_err(|e| Error::Structural(format!("jsonl: {e}")))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub z: usize,
    pub input: String,
    pub expected: String,
    pub runs: u64,
    pub successes: u64,
    pub frequency: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Group rows by (z, input) in first-seen order. `ok` decides success.
pub fn aggregate(rows: &[RunRow], ok: impl Fn(&RunRow) -> bool) -> Vec<Aggregate> {
    let mut out: Vec<Aggregate> = Vec::new();
    for r in rows {
        let hit = u64::from(ok(r));
        match out.iter_mut().find(|a| a.z == r.z && a.input == r.input) {
            Some(a) => {
                a.runs += 1;
                a.successes += hit;
            }
            None => out.push(Aggregate {
                z: r.z,
                input: r.input.clone(),
                expected: r.expected.clone(),
                runs: 1,
                successes: hit,
                frequency: 0.0,
                lower: 0.0,
                upper: 0.0,
            }),
        }
    }
    for a in &mut out {
        a.frequency = a.successes as f64 / a.runs as f64;
        (a.lower, a.upper) = wilson(a.successes, a.runs, Z99);
    }
    out
}
