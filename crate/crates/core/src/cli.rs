//! Batch experiment runner behind the `samplebased` binary.
//!
//! Exit codes: 0 ok, 1 run or verification failure, 2 parse, 3 budget or
//! infeasible, 4 derandomization.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::daisy::{partition, petal_overlap_bound_check, DaisyPartition, OverlapReport};
use crate::error::Error;
use crate::model::{
    all_words, extract_tuples, hamming, normalize, word_count, Label, LocalAlgorithm, Out, Prob,
    Word,
};
use crate::oracle::{
    check_robustness, check_volume_lemma, exact_output_dist, Counterexample, RobustnessOptions,
};
use crate::report::{self, aggregate, Aggregate, Envelope, RunRow};
use crate::sampler::{preprocess, PreparedSampler, SamplerOptions};
use crate::transforms::{prepare, PreparationReport, PrepareOptions, PreparePolicy};
use crate::{par, zoo};

pub const BUDGET_ENV: &str = "SAMPLEBASED_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Lib(
                Error::Budget { .. } | Error::Infeasible { .. } | Error::ColoringBudget(_),
            ) => 3,
            CliError::Lib(Error::Derandomization { .. }) => 4,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "samplebased",
    version,
    about = "Robust local algorithms to sample-based algorithms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Daisy-partition a multi-collection of sets.
    Partition(PartitionArgs),
    /// Prepare an algorithm and preprocess it into a persisted sampler.
    Transform(TransformArgs),
    /// Execute a sampler over seeds and inputs, one row per run.
    Run(RunArgs),
    /// Run the oracle suites on an algorithm.
    Verify(VerifyArgs),
    /// Built-in instances.
    #[command(subcommand)]
    Zoo(ZooCommand),
}

#[derive(Subcommand, Debug)]
pub enum ZooCommand {
    List,
    /// Print an instance as JSON (usable with --algorithm).
    Show {
        name: String,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct Source {
    /// Zoo instance name.
    #[arg(long, conflicts_with = "algorithm")]
    pub instance: Option<String>,
    /// LocalAlgorithm JSON file.
    #[arg(long)]
    pub algorithm: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SamplerFlags {
    #[arg(long)]
    pub override_p: Option<f64>,
    #[arg(long)]
    pub override_gamma: Option<f64>,
    /// Replace the abort cap 2pn.
    #[arg(long)]
    pub override_cap: Option<f64>,
    /// Enumeration budget per daisy.
    #[arg(long, env = BUDGET_ENV)]
    pub budget: Option<u64>,
}

impl SamplerFlags {
    fn options(&self) -> SamplerOptions {
        SamplerOptions {
            override_p: self.override_p,
            override_gamma: self.override_gamma,
            override_cap: self.override_cap,
            budget: self.budget,
        }
    }
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// JSON file {"n": .., "q": .., "sets": [[..], ..]}.
    #[arg(long, conflicts_with_all = ["instance", "algorithm"])]
    pub sets: Option<PathBuf>,
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 0)]
    pub z: usize,
    /// Partition the tuples with this output.
    #[arg(long, default_value = "1")]
    pub side: OutArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = PolicyArg::Full)]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub sampler: SamplerFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Artifact written by `transform`.
    #[arg(long, conflicts_with_all = ["instance", "algorithm"])]
    pub sampler: Option<PathBuf>,
    /// Without an artifact the source is transformed in memory with this policy.
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = PolicyArg::Direct)]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub flags: SamplerFlags,
    /// Restrict to one explicit input.
    #[arg(long)]
    pub z: Option<usize>,
    /// Input word, repeatable. Defaults to every domain point.
    #[arg(long = "input")]
    pub inputs: Vec<String>,
    /// File with one word per line.
    #[arg(long, conflicts_with = "inputs")]
    pub inputs_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Range `a..b` or list `a,b,c`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Aggregate JSON with Wilson intervals.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Fill the elapsed column (rows stop being replayable byte for byte).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: Source,
    /// Every zoo instance.
    #[arg(long, conflicts_with_all = ["instance", "algorithm"])]
    pub all: bool,
    /// Radii to check instead of the declared ones, as fractions.
    #[arg(long)]
    pub rho0: Option<String>,
    #[arg(long)]
    pub rho1: Option<String>,
    /// Largest |Σ|ⁿ scanned exhaustively.
    #[arg(long, default_value_t = 1 << 20)]
    pub exhaustive_limit: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyArg {
    Full,
    Direct,
}

impl From<PolicyArg> for PreparePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Full => PreparePolicy::Full,
            PolicyArg::Direct => PreparePolicy::Direct,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
}

/// What determines the content of a report. Output paths and formats are
/// left out so that the hash only changes when results can.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub stage: String,
    pub instance: Option<String>,
    pub algorithm: Option<String>,
    /// Config hash of the transform artifact.
    pub sampler: Option<String>,
    pub policy: Option<PolicyArg>,
    pub seeds: Vec<u64>,
    pub z: Option<usize>,
    pub inputs: Vec<String>,
    pub overrides: SamplerOptions,
}

impl ExperimentConfig {
    fn new(stage: &str) -> Self {
        ExperimentConfig {
            stage: stage.into(),
            instance: None,
            algorithm: None,
            sampler: None,
            policy: None,
            seeds: Vec::new(),
            z: None,
            inputs: Vec::new(),
            overrides: SamplerOptions::default(),
        }
    }

    fn overridden(&self) -> bool {
        let o = &self.overrides;
        o.override_p.is_some() || o.override_gamma.is_some() || o.override_cap.is_some()
    }
}

pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Partition(a) => cmd_partition(&a),
        Command::Transform(a) => cmd_transform(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Zoo(ZooCommand::List) => cmd_zoo_list(),
        Command::Zoo(ZooCommand::Show { name }) => {
            let inst = zoo::by_name(&name)?;
            emit(None, &to_json(&inst))
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{what}: {e}")))
}

/// Load the algorithm named by `src`, returning it with a display name.
fn load_algorithm(src: &Source) -> CliResult<(String, LocalAlgorithm)> {
    match (&src.instance, &src.algorithm) {
        (Some(name), _) => Ok((name.clone(), zoo::by_name(name)?.algorithm)),
        (None, Some(path)) => {
            let what = path.display().to_string();
            let mut v: serde_json::Value = parse_json(&read(path)?, &what)?;
            // Output of `zoo show` wraps the algorithm.
            if let Some(inner) = v.get_mut("algorithm") {
                v = inner.take();
            }
            let alg: LocalAlgorithm =
                serde_json::from_value(v).map_err(|e| CliError::Parse(format!("{what}: {e}")))?;
            alg.validate()?;
            Ok((path.display().to_string(), alg))
        }
        (None, None) => Err(CliError::Parse("give --instance or --algorithm".into())),
    }
}

fn describe_source(cfg: &mut ExperimentConfig, src: &Source) {
    cfg.instance = src.instance.clone();
    cfg.algorithm = src.algorithm.as_ref().map(|p| p.display().to_string());
}

pub fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    let bad = || CliError::Parse(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_prob(s: &str) -> CliResult<Prob> {
    s.trim()
        .parse::<Prob>()
        .map_err(|_| CliError::Parse(format!("bad fraction {s:?}")))
}

fn parse_word(s: &str) -> CliResult<Word> {
    Word::parse(s.trim()).map_err(|e| CliError::Parse(e.to_string()))
}

// ---- partition

#[derive(Debug, Deserialize)]
struct SetFile {
    n: usize,
    q: usize,
    sets: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize)]
struct PartitionBody {
    partition: DaisyPartition,
    invariants: Check,
    overlap: Option<OverlapReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub message: Option<String>,
}

impl Check {
    fn from(r: crate::Result<()>) -> Self {
        match r {
            Ok(()) => Check {
                passed: true,
                message: None,
            },
            Err(e) => Check {
                passed: false,
                message: Some(e.to_string()),
            },
        }
    }
}

fn cmd_partition(a: &PartitionArgs) -> CliResult<()> {
    let mut cfg = ExperimentConfig::new("partition");
    let (n, q, sets) = match &a.sets {
        Some(path) => {
            cfg.algorithm = Some(path.display().to_string());
            let f: SetFile = parse_json(&read(path)?, &path.display().to_string())?;
            (f.n, f.q, f.sets)
        }
        None => {
            describe_source(&mut cfg, &a.source);
            cfg.z = Some(a.z);
            let (_, alg) = load_algorithm(&a.source)?;
            let alg = normalize(&alg)?;
            let side = match a.side {
                OutArg::Zero => Out::Zero,
                OutArg::One => Out::One,
            };
            let sets = extract_tuples(&alg, a.z)?
                .into_iter()
                .filter(|t| t.out == side)
                .map(|t| t.set)
                .collect();
            (alg.n(), alg.q, sets)
        }
    };
    let p = match partition(&sets, n, q) {
        Ok(p) => p,
        Err(Error::Structural(m)) => return Err(CliError::Parse(m)),
        Err(e) => return Err(e.into()),
    };
    let invariants = Check::from(p.check_invariants());
    let overlap = petal_overlap_bound_check(&p);
    let failed = !invariants.passed || overlap.is_err();
    let message = overlap.as_ref().err().map(ToString::to_string);
    let body = PartitionBody {
        partition: p,
        invariants,
        overlap: overlap.ok(),
    };
    emit(
        a.out.as_ref(),
        &to_json(&Envelope::new("partition", &cfg, None, body)),
    )?;
    if failed {
        let why = message.unwrap_or_else(|| "partition invariants failed".into());
        return Err(CliError::Failed(why));
    }
    Ok(())
}

// ---- transform

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformBody {
    pub source: String,
    /// γ, p or the cap were overridden; sampler guarantees do not apply.
    pub overridden: bool,
    pub preparation: PreparationReport,
    pub sampler: PreparedSampler,
}

pub const SAMPLER_KIND: &str = "prepared_sampler";

fn transform(
    src: &Source,
    policy: PolicyArg,
    seed: u64,
    opts: &SamplerOptions,
) -> CliResult<TransformBody> {
    let (name, alg) = load_algorithm(src)?;
    let popts = PrepareOptions {
        policy: policy.into(),
        seed,
        ..PrepareOptions::default()
    };
    let (prepared, preparation) = prepare(&alg, &popts)?;
    let sampler = preprocess(&prepared, opts)?;
    Ok(TransformBody {
        source: name,
        overridden: sampler.config.overridden,
        preparation,
        sampler,
    })
}

fn cmd_transform(a: &TransformArgs) -> CliResult<()> {
    let mut cfg = ExperimentConfig::new("transform");
    describe_source(&mut cfg, &a.source);
    cfg.policy = Some(a.policy);
    cfg.seeds = vec![a.seed];
    cfg.overrides = a.sampler.options();
    let body = transform(&a.source, a.policy, a.seed, &cfg.overrides)?;
    if body.overridden {
        eprintln!("warning: overrides in effect, guarantees void");
    }
    emit(
        a.out.as_ref(),
        &to_json(&Envelope::new(SAMPLER_KIND, &cfg, Some(a.seed), body)),
    )
}

// ---- run

#[derive(Debug, Serialize)]
struct RunSummary {
    source: String,
    overridden: bool,
    rows: usize,
    aborted: usize,
    aggregates: Vec<Aggregate>,
}

fn cmd_run(a: &RunArgs) -> CliResult<()> {
    let mut cfg = ExperimentConfig::new("run");
    cfg.seeds = match (&a.seeds, a.seed) {
        (Some(s), _) => parse_seeds(s)?,
        (None, Some(s)) => vec![s],
        (None, None) => vec![0],
    };
    cfg.z = a.z;
    let body = match &a.sampler {
        Some(path) => {
            let env: Envelope<TransformBody> = report::open(&read(path)?, SAMPLER_KIND)
                .map_err(|e| CliError::Parse(e.to_string()))?;
            // Identify the artifact by content, not by where it lives.
            cfg.sampler = Some(env.config_hash.clone());
            if a.flags.override_p.is_some()
                || a.flags.override_gamma.is_some()
                || a.flags.override_cap.is_some()
            {
                return Err(CliError::Parse("overrides apply at transform time".into()));
            }
            env.body
        }
        None => {
            describe_source(&mut cfg, &a.source);
            cfg.policy = Some(a.policy);
            cfg.overrides = a.flags.options();
            transform(&a.source, a.policy, 0, &cfg.overrides)?
        }
    };
    let pre = &body.sampler;

    let mut words: Vec<(usize, Word)> = Vec::new();
    let zs: Vec<usize> = match a.z {
        Some(z) => {
            pre.for_z(z)?;
            vec![z]
        }
        None => (0..pre.per_z.len()).collect(),
    };
    let explicit: Vec<String> = match &a.inputs_file {
        Some(p) => read(p)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect(),
        None => a.inputs.clone(),
    };
    cfg.inputs = explicit.clone();
    if explicit.is_empty() {
        for &z in &zs {
            for (w, _) in pre.spec.domain(z)? {
                words.push((z, w));
            }
        }
    } else {
        for s in &explicit {
            let w = parse_word(s)?;
            w.check(pre.n, pre.alphabet)
                .map_err(|e| CliError::Parse(e.to_string()))?;
            words.extend(zs.iter().map(|&z| (z, w.clone())));
        }
    }

    let jobs: Vec<(usize, u64)> = (0..words.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let name = body.source.as_str();
    let rows = par::map_slice(&jobs, |&(i, seed)| -> crate::Result<RunRow> {
        let (z, w) = &words[i];
        let start = Instant::now();
        let r = crate::sampler::run(pre, *z, w, seed)?;
        let elapsed = a.timing.then(|| start.elapsed().as_secs_f64());
        Ok(RunRow::new(
            name,
            w,
            pre.spec.label(*z, w).out(),
            pre.config.p,
            &r,
            elapsed,
        ))
    })
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;

    let mut buf = Vec::new();
    match a.format {
        Format::Csv => report::write_csv(&rows, &mut buf)?,
        Format::Jsonl => report::write_jsonl(&rows, &mut buf)?,
    }
    emit(a.out.as_ref(), &String::from_utf8(buf).expect("utf-8 rows"))?;

    let in_domain: Vec<RunRow> = rows
        .iter()
        .filter(|r| r.expected != "outside")
        .cloned()
        .collect();
    let relaxed = pre.relaxed;
    let spec = &pre.spec;
    let aggregates = aggregate(&in_domain, |r| {
        let expected = r.expected == r.output.to_string();
        let w = Word::parse(&r.input).expect("rows hold parsed words");
        expected || (relaxed && r.output == Out::Bot && !spec.is_valid(r.z, &w))
    });
    let overridden = body.overridden || cfg.overridden();
    let summary = RunSummary {
        source: body.source.clone(),
        overridden,
        rows: rows.len(),
        aborted: rows.iter().filter(|r| r.aborted).count(),
        aggregates,
    };
    let env = Envelope::new("run_summary", &cfg, cfg.seeds.first().copied(), summary);
    if let Some(p) = &a.summary {
        emit(Some(p), &to_json(&env))?;
    }
    eprintln!(
        "{} rows, {} aborted, config {}{}",
        env.body.rows,
        env.body.aborted,
        &env.config_hash[..12],
        if overridden {
            " (overrides in effect, guarantees void)"
        } else {
            ""
        }
    );
    if let Some(worst) = env
        .body
        .aggregates
        .iter()
        .min_by(|x, y| x.frequency.total_cmp(&y.frequency))
    {
        eprintln!(
            "lowest success: z={} input={} {}/{} = {:.3} (99% CI {:.3}..{:.3})",
            worst.z,
            worst.input,
            worst.successes,
            worst.runs,
            worst.frequency,
            worst.lower,
            worst.upper
        );
    }
    Ok(())
}

// ---- verify

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub passed: bool,
    pub exhaustive: bool,
    pub detail: String,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceVerification {
    pub source: String,
    pub suites: Vec<SuiteResult>,
}

fn suite(name: &str, passed: bool, exhaustive: bool, detail: String) -> SuiteResult {
    SuiteResult {
        suite: name.into(),
        passed,
        exhaustive,
        detail,
        counterexample: None,
    }
}

fn failed_suite(name: &str, e: &Error) -> SuiteResult {
    suite(name, false, false, e.to_string())
}

pub fn verify_algorithm(
    source: &str,
    alg: &LocalAlgorithm,
    rho: [Prob; 2],
    limit: u64,
) -> InstanceVerification {
    let exhaustive = word_count(alg.n(), alg.alphabet()).is_some_and(|t| t <= limit);
    let mut suites = Vec::new();

    let opts = RobustnessOptions {
        budget: limit,
        ..RobustnessOptions::default()
    };
    suites.push(match check_robustness(alg, rho[0], rho[1], &opts) {
        Ok(r) => SuiteResult {
            suite: "robustness".into(),
            passed: r.holds,
            exhaustive: r.exhaustive,
            detail: format!(
                "declared radii {}/{}, certified {}/{}",
                r.declared[0], r.declared[1], r.certified[0], r.certified[1]
            ),
            counterexample: r.counterexample,
        },
        Err(e) => failed_suite("robustness", &e),
    });

    let normal = normalize(alg);
    suites.push(match &normal {
        Ok(nrm) if exhaustive => normalize_equivalence(alg, nrm),
        Ok(_) => suite(
            "normalize-equivalence",
            true,
            false,
            "skipped: beyond exhaustive limit".into(),
        ),
        Err(e) => failed_suite("normalize-equivalence", e),
    });
    suites.push(match &normal {
        Ok(nrm) if exhaustive => volume_suite(nrm),
        Ok(_) => suite(
            "volume",
            true,
            false,
            "skipped: beyond exhaustive limit".into(),
        ),
        Err(e) => failed_suite("volume", e),
    });
    suites.push(match &normal {
        Ok(nrm) => partition_suite(nrm),
        Err(e) => failed_suite("partition-invariants", e),
    });
    InstanceVerification {
        source: source.into(),
        suites,
    }
}

fn normalize_equivalence(alg: &LocalAlgorithm, nrm: &LocalAlgorithm) -> SuiteResult {
    let mut checked = 0u64;
    for z in 0..alg.spec.z_count {
        for w in all_words(alg.n(), alg.alphabet()) {
            let same = exact_output_dist(alg, z, &w).and_then(|a| {
                exact_output_dist(nrm, z, &w).map(|b| {
                    a.prob(Out::Zero) == b.prob(Out::Zero) && a.prob(Out::One) == b.prob(Out::One)
                })
            });
            match same {
                Ok(true) => checked += 1,
                Ok(false) => {
                    return suite(
                        "normalize-equivalence",
                        false,
                        true,
                        format!("z={z} x={w}: distributions differ"),
                    )
                }
                Err(e) => return failed_suite("normalize-equivalence", &e),
            }
        }
    }
    suite(
        "normalize-equivalence",
        true,
        true,
        format!("{checked} inputs agree exactly"),
    )
}

/// For each domain point x, pair it with a nearest domain point y of the
/// other label and check the volume bound on μ_x.
fn volume_suite(nrm: &LocalAlgorithm) -> SuiteResult {
    let mut pairs = 0;
    let mut exhaustive = true;
    for z in 0..nrm.spec.z_count {
        let domain = match nrm.spec.domain(z) {
            Ok(d) => d,
            Err(e) => return failed_suite("volume", &e),
        };
        for (x, lx) in &domain {
            if *lx == Label::Outside {
                continue;
            }
            let witness = domain
                .iter()
                .filter(|(_, ly)| ly != lx)
                .min_by_key(|(y, _)| hamming(x, y));
            let Some((y, _)) = witness else { continue };
            match check_volume_lemma(nrm, z, x, y) {
                Ok(r) if r.holds => {
                    pairs += 1;
                    exhaustive &= r.exhaustive;
                }
                Ok(r) => {
                    return suite(
                        "volume",
                        false,
                        r.exhaustive,
                        format!(
                            "z={z} x={x} y={y}: weight {} exceeds {}",
                            r.max_weight, r.bound
                        ),
                    )
                }
                Err(e) => return failed_suite("volume", &e),
            }
        }
    }
    suite(
        "volume",
        true,
        exhaustive,
        format!("{pairs} pairs within 2σ"),
    )
}

fn partition_suite(nrm: &LocalAlgorithm) -> SuiteResult {
    let mut parts = 0;
    for z in 0..nrm.spec.z_count {
        let tuples = match extract_tuples(nrm, z) {
            Ok(t) => t,
            Err(e) => return failed_suite("partition-invariants", &e),
        };
        for side in [Out::Zero, Out::One] {
            let sets: Vec<Vec<usize>> = tuples
                .iter()
                .filter(|t| t.out == side)
                .map(|t| t.set.clone())
                .collect();
            let r = partition(&sets, nrm.n(), nrm.q).and_then(|p| {
                p.check_invariants()?;
                petal_overlap_bound_check(&p).map(|_| ())
            });
            if let Err(e) = r {
                return suite(
                    "partition-invariants",
                    false,
                    true,
                    format!("z={z} side {side}: {e}"),
                );
            }
            parts += 1;
        }
    }
    suite(
        "partition-invariants",
        true,
        true,
        format!("{parts} partitions hold"),
    )
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<()> {
    let mut cfg = ExperimentConfig::new("verify");
    describe_source(&mut cfg, &a.source);
    let targets: Vec<(String, LocalAlgorithm)> = if a.all {
        cfg.instance = Some("all".into());
        zoo::all()?
            .into_iter()
            .map(|i| (i.name, i.algorithm))
            .collect()
    } else {
        vec![load_algorithm(&a.source)?]
    };
    let override_rho = |s: &Option<String>| s.as_deref().map(parse_prob).transpose();
    let (r0, r1) = (override_rho(&a.rho0)?, override_rho(&a.rho1)?);
    let results: Vec<InstanceVerification> = targets
        .iter()
        .map(|(name, alg)| {
            verify_algorithm(
                name,
                alg,
                [r0.unwrap_or(alg.rho0), r1.unwrap_or(alg.rho1)],
                a.exhaustive_limit,
            )
        })
        .collect();
    emit(
        a.out.as_ref(),
        &to_json(&Envelope::new(
            "verification",
            &(cfg, a.exhaustive_limit, &a.rho0, &a.rho1),
            None,
            &results,
        )),
    )?;
    let mut failures = Vec::new();
    for r in &results {
        for s in &r.suites {
            if !s.passed {
                failures.push(format!("{}: {} failed ({})", r.source, s.suite, s.detail));
            } else if !s.exhaustive {
                eprintln!(
                    "warning: {}: {} not exhaustive ({})",
                    r.source, s.suite, s.detail
                );
            }
        }
    }
    for f in &failures {
        eprintln!("{f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} suite(s) failed",
            failures.len()
        )))
    }
}

// ---- zoo

fn cmd_zoo_list() -> CliResult<()> {
    let mut text = String::from("name\tkind\tn\tq\tsigma\trho0\trho1\n");
    for inst in zoo::all()? {
        let a = &inst.algorithm;
        let kind = serde_json::to_value(inst.kind).expect("kinds serialize");
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            inst.name,
            kind.as_str().unwrap_or("?"),
            a.n(),
            a.q,
            a.sigma,
            a.rho0,
            a.rho1
        ));
    }
    emit(None, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3..6").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seeds("1, 9,2").unwrap(), vec![1, 9, 2]);
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn exit_codes() {
        let budget = Error::Budget {
            j: 1,
            kernel: 3,
            assignments: 8.0,
            budget: 4,
        };
        assert_eq!(CliError::Lib(budget).exit_code(), 3);
        let d = Error::Derandomization {
            z: 0,
            attempts: 1,
            worst: Word::zeros(2),
            error: Prob::new(1, 2),
        };
        assert_eq!(CliError::Lib(d).exit_code(), 4);
        assert_eq!(CliError::Parse("x".into()).exit_code(), 2);
        assert_eq!(CliError::Failed("x".into()).exit_code(), 1);
    }

    #[test]
    fn mislabeled_radius_fails_robustness() {
        let inst = zoo::by_name("weight-gap-8").unwrap();
        let ok = verify_algorithm(
            "g",
            &inst.algorithm,
            [inst.algorithm.rho0, inst.algorithm.rho1],
            1 << 20,
        );
        assert!(ok.suites.iter().all(|s| s.passed), "{ok:?}");
        let bad = verify_algorithm(
            "g",
            &inst.algorithm,
            [Prob::new(1, 2), Prob::new(1, 2)],
            1 << 20,
        );
        let rob = &bad.suites[0];
        assert!(!rob.passed && rob.counterexample.is_some());
    }

    #[test]
    fn beyond_limit_is_marked_not_exhaustive() {
        let inst = zoo::by_name("all-equal-8").unwrap();
        let v = verify_algorithm(
            "a",
            &inst.algorithm,
            [inst.algorithm.rho0, inst.algorithm.rho1],
            16,
        );
        assert!(v.suites.iter().all(|s| s.passed), "{v:?}");
        assert!(v.suites.iter().any(|s| !s.exhaustive));
    }

    #[test]
    fn relaxed_transform_round_trips() {
        let src = Source {
            instance: Some("relaxed-rep3-2".into()),
            algorithm: None,
        };
        let body = transform(&src, PolicyArg::Direct, 0, &SamplerOptions::default()).unwrap();
        assert!(body.sampler.relaxed);
        let env = Envelope::new(SAMPLER_KIND, &1, Some(0), body);
        let back: Envelope<TransformBody> = report::open(&to_json(&env), SAMPLER_KIND).unwrap();
        assert_eq!(back, env);
    }
}
