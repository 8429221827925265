//! fpguard: scan SPX programs and files with signature, integrity,
//! heuristic and sandbox detectors; generate corpora and measure
//! false-positive/false-negative tradeoffs.
//!
//! Exit codes: 0 everything clean, 1 infections found, 3 suspicions but no
//! infections, 2 operational error.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fpguard_core::engine::{DetectorSet, Engine, EngineConfig, FileReport};
use fpguard_core::heuristics::{self, FeatureWeights, ThresholdTiers, TierLevel};
use fpguard_core::integrity::{build_baseline, normalize_path_id, BaselineStore};
use fpguard_core::netwindow::{parse_stream, score_windows, WindowParams};
use fpguard_core::sandbox::{self, execute};
use fpguard_core::sigdb::{parse_db, serialize_db, SignatureDb};
use fpguard_core::sigselect::{extract_candidates, score_candidates, select_signature};
use fpguard_core::spx::parse_spx;
use fpguard_core::verdict::{apply_feedback, CombinationPolicy, Decision, Verdict};
use fpguard_harness::corpus::{generate_corpus, CorpusManifest};
use fpguard_harness::eval::{evaluate, threshold_sweep, EvalConfig, Metrics};

#[derive(Parser)]
#[command(
    name = "fpguard",
    version,
    about = "Malware scanning engine with FP throttling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan files or directories and print one verdict line per file.
    Scan(ScanArgs),
    /// Hash a file tree into an integrity baseline database.
    Baseline(BaselineArgs),
    /// Run one SPX program in the sandbox and print its trace.
    Emulate(EmulateArgs),
    /// Select the signature candidate least likely to hit benign files.
    SelectSig(SelectSigArgs),
    /// Score a packet stream over observation windows.
    Net(NetArgs),
    /// Evaluate an engine configuration against a labeled corpus.
    Eval(EvalArgs),
    /// Evaluate across a list of heuristic thresholds.
    Sweep(SweepArgs),
    /// Generate a labeled synthetic corpus.
    GenCorpus(GenCorpusArgs),
    /// Parse and validate a signature database.
    DbCheck(DbCheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TierArg {
    Low,
    Medium,
    High,
}

impl From<TierArg> for TierLevel {
    fn from(t: TierArg) -> TierLevel {
        match t {
            TierArg::Low => TierLevel::Low,
            TierArg::Medium => TierLevel::Medium,
            TierArg::High => TierLevel::High,
        }
    }
}

/// Flags shared by the scanning subcommands.
#[derive(Args)]
struct EngineArgs {
    /// Signature database (.avdb).
    #[arg(long, env = "FPGUARD_DB")]
    db: Option<PathBuf>,
    /// Scoring profile (.avw); the built-in default profile when omitted.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Heuristic threshold tier.
    #[arg(long, value_enum, default_value = "medium")]
    tier: TierArg,
    /// Distinct suggestive evidence categories needed to confirm.
    #[arg(long, default_value_t = 2)]
    k_confirm: usize,
    /// Whether one exact signature hit confirms on its own.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    exact_sufficient: bool,
    /// Whether an integrity mismatch alone raises an alarm.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    integrity_alone_alarms: bool,
    /// Sandbox step budget.
    #[arg(long, default_value_t = sandbox::DEFAULT_BUDGET)]
    emulate_budget: usize,
    /// Detectors to run: comma-separated subset of
    /// exact,generic,integrity,static,dynamic,ability.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Integrity baseline database (.avdb with HASH records).
    #[arg(long)]
    baseline: Option<PathBuf>,
}

impl EngineArgs {
    fn load_db(&self) -> Result<SignatureDb> {
        match &self.db {
            None => Ok(SignatureDb {
                version: 1,
                ..SignatureDb::default()
            }),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                parse_db(&text).with_context(|| format!("parsing {}", path.display()))
            }
        }
    }

    fn load_profile(&self) -> Result<(FeatureWeights, ThresholdTiers)> {
        match &self.weights {
            None => Ok(heuristics::default_profile()),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                heuristics::load_weights(&text)
                    .map_err(|e| anyhow!("parsing {}: {e}", path.display()))
            }
        }
    }

    fn load_baseline(&self) -> Result<Option<BaselineStore>> {
        let Some(path) = &self.baseline else {
            return Ok(None);
        };
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let db = parse_db(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Some(BaselineStore::from_records(&db.baselines)))
    }

    fn detectors(&self) -> Result<DetectorSet> {
        if self.methods.is_empty() {
            return Ok(DetectorSet::ALL);
        }
        let mut set = DetectorSet::NONE;
        for m in &self.methods {
            match m.trim() {
                "exact" => set.exact = true,
                "generic" => set.generic = true,
                "integrity" => set.integrity = true,
                "static" => set.heuristic_static = true,
                "dynamic" => set.heuristic_dynamic = true,
                "ability" => set.ability = true,
                other => bail!("unknown method `{other}`"),
            }
        }
        Ok(set)
    }

    fn engine_config(&self) -> Result<EngineConfig> {
        Ok(EngineConfig {
            tier: self.tier.into(),
            policy: CombinationPolicy {
                k_confirm: self.k_confirm.max(1),
                exact_is_sufficient: self.exact_sufficient,
                integrity_alone_alarms: self.integrity_alone_alarms,
            },
            detectors: self.detectors()?,
            budget: self.emulate_budget.max(1),
        })
    }

    fn build_engine(&self) -> Result<Engine> {
        let db = self.load_db()?;
        let (weights, tiers) = self.load_profile()?;
        let engine = Engine::new(&db, weights, tiers, self.engine_config()?);
        Ok(match self.load_baseline()? {
            Some(b) => engine.with_baseline(b),
            None => engine,
        })
    }

    fn eval_config(&self) -> Result<EvalConfig> {
        let (weights, tiers) = self.load_profile()?;
        Ok(EvalConfig {
            db: self.load_db()?,
            weights,
            tiers,
            engine: self.engine_config()?,
            baseline: self.load_baseline()?,
        })
    }
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Prompt for a decision on each Suspicious file.
    #[arg(long)]
    interactive: bool,
    /// Scripted answers for --interactive: one y/n per line.
    #[arg(long)]
    answers: Option<PathBuf>,
    /// Worker threads for scanning (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Emit JSON instead of text lines.
    #[arg(long)]
    json: bool,
    /// Files or directories to scan.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Where to write the baseline database.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: bool,
    /// Root directory to hash.
    root: PathBuf,
}

#[derive(Args)]
struct EmulateArgs {
    #[arg(long, default_value_t = sandbox::DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long)]
    json: bool,
    /// SPX program to run.
    program: PathBuf,
}

#[derive(Args)]
struct SelectSigArgs {
    /// Malicious sample to extract candidates from.
    #[arg(long)]
    sample: PathBuf,
    /// Directory of benign files to score against.
    #[arg(long)]
    benign_dir: PathBuf,
    /// Candidate length in bytes.
    #[arg(long, default_value_t = fpguard_core::sigselect::DEFAULT_N)]
    n: usize,
    /// Extraction stride.
    #[arg(long, default_value_t = fpguard_core::sigselect::DEFAULT_STRIDE)]
    stride: usize,
    /// Name for the emitted EXACT record.
    #[arg(long, default_value = "selected.sig")]
    name: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct NetArgs {
    /// Packet stream (.pkt).
    #[arg(long)]
    stream: PathBuf,
    /// Observation window in milliseconds.
    #[arg(long)]
    window: u64,
    #[arg(long, default_value_t = WindowParams::default().rate_limit)]
    rate_limit: usize,
    #[arg(long, default_value_t = WindowParams::default().fanout_limit)]
    fanout_limit: usize,
    #[arg(long, default_value_t = WindowParams::default().repeat_limit)]
    repeat_limit: usize,
    /// Scoring profile (.avw); built-in default when omitted.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Corpus manifest (.tsv).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    manifest: PathBuf,
    /// Thresholds to evaluate, ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    thresholds: Vec<u32>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    benign: usize,
    #[arg(long)]
    malicious: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DbCheckArgs {
    #[arg(long)]
    json: bool,
    /// Database to validate.
    database: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("fpguard: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Scan(args) => cmd_scan(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Emulate(args) => cmd_emulate(args),
        Command::SelectSig(args) => cmd_select_sig(args),
        Command::Net(args) => cmd_net(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::GenCorpus(args) => cmd_gen_corpus(args),
        Command::DbCheck(args) => cmd_db_check(args),
    }
}

/// One file queued for scanning: display path plus the baseline key.
struct ScanTarget {
    display: String,
    path: PathBuf,
    path_id: String,
}

fn collect_targets(paths: &[PathBuf]) -> Result<Vec<ScanTarget>> {
    let mut targets = Vec::new();
    for arg in paths {
        let meta = fs::metadata(arg).with_context(|| format!("reading {}", arg.display()))?;
        if meta.is_file() {
            targets.push(ScanTarget {
                display: arg.display().to_string(),
                path: arg.clone(),
                path_id: normalize_path_id(arg).unwrap_or_else(|| arg.display().to_string()),
            });
            continue;
        }
        for entry in walkdir::WalkDir::new(arg).sort_by_file_name() {
            let entry = entry.with_context(|| format!("walking {}", arg.display()))?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry.path().strip_prefix(arg).unwrap_or(entry.path());
            let path_id = normalize_path_id(rel).unwrap_or_else(|| rel.display().to_string());
            targets.push(ScanTarget {
                display: entry.path().display().to_string(),
                path: entry.path().to_path_buf(),
                path_id,
            });
        }
    }
    targets.sort_by(|a, b| a.display.cmp(&b.display));
    Ok(targets)
}

fn evidence_summary(verdict: &Verdict) -> String {
    if verdict.evidence.is_empty() {
        return "-".into();
    }
    let parts: Vec<String> = verdict
        .evidence
        .iter()
        .map(|e| format!("{}({})", e.category, e.detail))
        .collect();
    let mut summary = parts.join("; ");
    if verdict.overridden_by_user {
        summary.push_str(" [user]");
    }
    summary
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode> {
    let engine = args.engine.build_engine()?;
    let targets = collect_targets(&args.paths)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("building scan pool")?;
    let mut reports: Vec<(String, FileReport)> = pool.install(|| {
        use rayon::prelude::*;
        targets
            .par_iter()
            .map(|t| {
                let report = engine
                    .scan_path(&t.path, &t.path_id)
                    .map_err(|e| anyhow!("{e}"))?;
                Ok((t.display.clone(), report))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    reports.sort_by(|a, b| a.0.cmp(&b.0));

    if args.interactive {
        let mut answers = load_answers(args.answers.as_deref())?;
        for (display, report) in &mut reports {
            if report.verdict.decision != Decision::Suspicious {
                continue;
            }
            eprint!(
                "{display}: suspicious ({}). Treat as genuine? [y/N] ",
                evidence_summary(&report.verdict)
            );
            std::io::stderr().flush().ok();
            let genuine = next_answer(&mut answers)?;
            report.verdict =
                apply_feedback(&report.verdict, genuine).expect("feedback on suspicious verdict");
        }
    }

    if args.json {
        let out: Vec<serde_json::Value> = reports
            .iter()
            .map(|(display, r)| {
                serde_json::json!({
                    "path": display,
                    "decision": r.verdict.decision,
                    "overridden_by_user": r.verdict.overridden_by_user,
                    "evidence": r.verdict.evidence,
                    "hits": r.hits,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        for (display, r) in &reports {
            println!(
                "{display}\t{}\t{}",
                r.verdict.decision,
                evidence_summary(&r.verdict)
            );
        }
    }

    let any_infected = reports
        .iter()
        .any(|(_, r)| r.verdict.decision == Decision::Infected);
    let any_suspicious = reports
        .iter()
        .any(|(_, r)| r.verdict.decision == Decision::Suspicious);
    Ok(ExitCode::from(if any_infected {
        1
    } else if any_suspicious {
        3
    } else {
        0
    }))
}

enum Answers {
    Scripted(Vec<bool>, usize),
    Stdin,
}

fn load_answers(path: Option<&Path>) -> Result<Answers> {
    match path {
        None => Ok(Answers::Stdin),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let list = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| matches!(l.trim(), "y" | "Y" | "yes"))
                .collect();
            Ok(Answers::Scripted(list, 0))
        }
    }
}

fn next_answer(answers: &mut Answers) -> Result<bool> {
    match answers {
        Answers::Scripted(list, used) => {
            let answer = list.get(*used).copied().unwrap_or(false);
            *used += 1;
            Ok(answer)
        }
        Answers::Stdin => {
            let mut line = String::new();
            std::io::stdin()
                .lock()
                .read_line(&mut line)
                .context("reading answer")?;
            Ok(matches!(line.trim(), "y" | "Y" | "yes"))
        }
    }
}

fn cmd_baseline(args: BaselineArgs) -> Result<ExitCode> {
    let store = build_baseline(&args.root)
        .map_err(|e| anyhow!("baselining {}: {e}", args.root.display()))?;
    if let Some((bad, _)) = store
        .iter()
        .find(|(p, _)| !fpguard_core::sigdb::valid_path_id(p))
    {
        bail!(
            "path `{bad}` cannot be stored in a baseline record (whitespace, `#`, and \
             non-normalized components are not representable)"
        );
    }
    let db = SignatureDb {
        baselines: store.to_records(),
        version: 1,
        ..SignatureDb::default()
    };
    fs::write(&args.out, serialize_db(&db))
        .with_context(|| format!("writing {}", args.out.display()))?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({ "files": store.len(), "out": args.out.display().to_string() })
        );
    } else {
        println!(
            "baselined {} files into {}",
            store.len(),
            args.out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_emulate(args: EmulateArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.program)
        .with_context(|| format!("reading {}", args.program.display()))?;
    let program =
        parse_spx(&text).map_err(|e| anyhow!("parsing {}: {e}", args.program.display()))?;
    let trace = execute(&program, args.budget.max(1));
    if args.json {
        println!("{}", serde_json::to_string_pretty(&trace)?);
    } else {
        for event in &trace.events {
            let arg = event
                .arg
                .as_ref()
                .map(|a| a.to_string())
                .unwrap_or_else(|| "-".into());
            println!("{}\t{}\t{}", event.step, event.kind, arg);
        }
        eprintln!(
            "steps={} terminated={:?}",
            trace.steps_executed, trace.terminated
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_select_sig(args: SelectSigArgs) -> Result<ExitCode> {
    let sample =
        fs::read(&args.sample).with_context(|| format!("reading {}", args.sample.display()))?;
    let mut corpus = Vec::new();
    for entry in walkdir::WalkDir::new(&args.benign_dir).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", args.benign_dir.display()))?;
        if entry.file_type().is_file() {
            corpus.push(
                fs::read(entry.path())
                    .with_context(|| format!("reading {}", entry.path().display()))?,
            );
        }
    }
    let candidates = extract_candidates(&sample, args.n, args.stride)?;
    let scored = score_candidates(candidates, &corpus)?;
    let winner = select_signature(&scored)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&winner)?);
    } else {
        eprintln!(
            "{} candidates over {} benign files; winner offset {} with {} hits (score {:.4})",
            scored.len(),
            corpus.len(),
            winner.offset,
            winner.benign_hits,
            winner.score
        );
        println!("EXACT {} {}", args.name, hex::encode_upper(&winner.bytes));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_net(args: NetArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.stream)
        .with_context(|| format!("reading {}", args.stream.display()))?;
    let packets =
        parse_stream(&text).map_err(|e| anyhow!("parsing {}: {e}", args.stream.display()))?;
    let (weights, _) = match &args.weights {
        None => heuristics::default_profile(),
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            heuristics::load_weights(&text)
                .map_err(|e| anyhow!("parsing {}: {e}", path.display()))?
        }
    };
    let params = WindowParams {
        rate_limit: args.rate_limit,
        fanout_limit: args.fanout_limit,
        repeat_limit: args.repeat_limit,
    };
    let windows =
        score_windows(&packets, args.window, &weights, &params).map_err(|e| anyhow!("{e}"))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&windows)?);
    } else {
        for w in &windows {
            let feats: Vec<String> = w.features.iter().map(|f| f.to_string()).collect();
            let feats = if feats.is_empty() {
                "-".into()
            } else {
                feats.join(",")
            };
            println!("{}\t{}\t{}", w.window_start, w.net, feats);
        }
    }
    Ok(ExitCode::SUCCESS)
}

// Timing fields stay off the stdout table so non-interactive text output
// is byte-identical across runs; they go to stderr instead.
fn metrics_tsv(rows: &[(String, &Metrics)]) -> String {
    let mut out =
        String::from("config\ttp\tfp\ttn\tfn\tsusp_benign\tfp_rate\tfn_rate\tscanned_bytes\n");
    for (label, m) in rows {
        out.push_str(&format!(
            "{label}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\n",
            m.tp,
            m.fp,
            m.tn,
            m.fn_count,
            m.suspicious_benign,
            m.fp_rate,
            m.fn_rate,
            m.scanned_bytes,
        ));
    }
    out
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let manifest = CorpusManifest::load(&args.manifest)
        .map_err(|e| anyhow!("loading {}: {e}", args.manifest.display()))?;
    let config = args.engine.eval_config()?;
    let result = evaluate(&manifest, &config).map_err(|e| anyhow!("{e}"))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result.metrics)?);
    } else {
        let m = &result.metrics;
        print!("{}", metrics_tsv(&[("eval".to_string(), m)]));
        println!(
            "scanned {} files: fp_rate {:.4} ({} of {} benign), fn_rate {:.4} ({} of {} malicious)",
            manifest.entries.len(),
            m.fp_rate,
            m.fp,
            m.fp + m.tn,
            m.fn_rate,
            m.fn_count,
            m.fn_count + m.tp,
        );
        eprintln!(
            "elapsed {:.2} ms, {:.2} MB/s",
            m.elapsed_ms,
            m.throughput_bps / (1024.0 * 1024.0)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let manifest = CorpusManifest::load(&args.manifest)
        .map_err(|e| anyhow!("loading {}: {e}", args.manifest.display()))?;
    let mut thresholds = args.thresholds.clone();
    thresholds.sort_unstable();
    let config = args.engine.eval_config()?;
    let rows = threshold_sweep(&manifest, &config, &thresholds).map_err(|e| anyhow!("{e}"))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        let labeled: Vec<(String, &Metrics)> = rows
            .iter()
            .map(|r| (format!("t={}", r.threshold), &r.metrics))
            .collect();
        print!("{}", metrics_tsv(&labeled));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_corpus(args: GenCorpusArgs) -> Result<ExitCode> {
    let gen = generate_corpus(args.seed, args.benign, args.malicious, &args.out)
        .map_err(|e| anyhow!("{e}"))?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "out": args.out.display().to_string(),
                "seed": args.seed,
                "benign": gen.manifest.benign_count(),
                "malicious": gen.manifest.malicious_count(),
                "db": args.out.join("db.avdb").display().to_string(),
                "manifest": args.out.join("manifest.tsv").display().to_string(),
            })
        );
    } else {
        println!(
            "generated {} benign + {} malicious under {} (seed {})",
            gen.manifest.benign_count(),
            gen.manifest.malicious_count(),
            args.out.display(),
            args.seed
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_db_check(args: DbCheckArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.database)
        .with_context(|| format!("reading {}", args.database.display()))?;
    let db = parse_db(&text).map_err(|e| anyhow!("{}: {e}", args.database.display()))?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "version": db.version,
                "exact": db.exact.len(),
                "generic": db.generic.len(),
                "baselines": db.baselines.len(),
            })
        );
    } else {
        println!(
            "{}: ok (version {}, {} exact, {} generic, {} baselines)",
            args.database.display(),
            db.version,
            db.exact.len(),
            db.generic.len(),
            db.baselines.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}
