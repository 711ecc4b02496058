//! Command-line definitions and dispatch.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use acs_core::bundle::{validate_bundle, AnnotationBundle};
use acs_core::ingest::RawDocument;
use acs_core::judgment::JudgmentRecord;
use acs_core::jsonl;
use acs_core::lid::load_lexicons;
use acs_core::pairgen::{GenerationConfig, MinimalPair};
use acs_core::scoring::{EndpointScorer, FileScorer, ScoredPair, ScorerBackend, ScorerKind};
use acs_core::stats::{
    fleiss_kappa, gold_agreement, margin_vs_agreement, paired_permutation_test,
    pos_margin_analysis, unpaired_permutation_test_with, JudgmentMatrix, Mode, PermutationConfig,
    PermutationResult, UnpairedStatistic,
};
use acs_judge::plan::{plan_assignments, Plan};
use acs_judge::service::{load_plan, save_plan};
use acs_judge::{filter_records, ExportFilter, JudgeService, PairTexts};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::artifact;
use crate::config::{LidMode, PipelineConfig};
use crate::error::{CliError, Result};
use crate::pipeline::{
    gate_bundle, genpairs_stage, ingest_stage, lid_stage, load_mwes, load_obscene,
    mono_lid, run_pipeline, score_stage, segmenter, IngestedSentence, LidSettings, StageReport,
};
use crate::table::{fmt_f, fmt_opt, funnel, Table};

#[derive(Debug, Parser)]
#[command(name = "acs", version, about = "Code-switched minimal pairs: generation, scoring and judgment")]
pub struct Cli {
    /// Pipeline config; stage commands use its thresholds and backends.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config language pair.
    #[arg(long = "lang-pair", global = true)]
    pub lang_pair: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs every enabled stage of the config.
    Run,
    /// Normalises and segments documents and applies the ingest gates.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        obscene_list: PathBuf,
        /// `fallback` or a segmenter URL.
        #[arg(long)]
        segmenter: Option<String>,
    },
    /// Labels tokens and applies the label gates.
    Lid {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// `trigram`, `none` or a classifier URL.
        #[arg(long)]
        mono_lid: Option<String>,
        /// Character-class labeling instead of wordlists.
        #[arg(long)]
        han: bool,
    },
    /// Bundle validation and gates.
    #[command(subcommand)]
    Bundle(BundleCommand),
    /// Generates minimal pairs from bundles.
    Genpairs {
        #[arg(long)]
        bundles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        mwes: Option<PathBuf>,
    },
    /// Scores pairs from an endpoint or a score file.
    Score {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, conflicts_with = "scores", required_unless_present = "scores")]
        endpoint: Option<String>,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Autoregressive)]
        kind: KindArg,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Permutation tests, agreement and margin analyses.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Human judgment collection.
    #[command(subcommand)]
    Judge(JudgeCommand),
}

#[derive(Debug, Subcommand)]
pub enum BundleCommand {
    /// Checks bundle structure and reports every invalid record.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Applies the bundle gates.
    Gate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Autoregressive,
    Masked,
}

impl From<KindArg> for ScorerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Autoregressive => ScorerKind::Autoregressive,
            KindArg::Masked => ScorerKind::Masked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Records,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Args)]
pub struct StatsOpts {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PairedStatistic {
    /// 1 when the observed sentence scores strictly higher, else 0.
    Correct,
    Margin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UnpairedArg {
    Mean,
    Median,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Paired permutation test on two scorers' per-pair statistics.
    PermPaired {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = PairedStatistic::Correct)]
        statistic: PairedStatistic,
        #[command(flatten)]
        opts: StatsOpts,
    },
    /// Unpaired permutation test between two samples.
    PermUnpaired {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = UnpairedArg::Mean)]
        statistic: UnpairedArg,
        #[command(flatten)]
        opts: StatsOpts,
    },
    /// Fleiss's kappa over exported judgments.
    Kappa {
        #[arg(long)]
        judgments: PathBuf,
        #[command(flatten)]
        opts: StatsOpts,
    },
    /// Per-annotator and pooled accuracy against the observed sentence.
    Agreement {
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[command(flatten)]
        opts: StatsOpts,
    },
    /// Absolute margins by part of speech of the changed word.
    Pos {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[command(flatten)]
        opts: StatsOpts,
    },
    /// Margins grouped by annotator agreement.
    Buckets {
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[command(flatten)]
        opts: StatsOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum JudgeCommand {
    /// Writes an assignment plan with annotator tokens.
    Plan {
        #[arg(long)]
        pairs: PathBuf,
        /// Comma-separated annotator ids.
        #[arg(long, value_delimiter = ',', required = true)]
        pool: Vec<String>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serves the judgment API.
    Serve {
        #[arg(long)]
        pairs: PathBuf,
        /// Read if present, written when a plan is created over the API.
        #[arg(long)]
        plan: PathBuf,
        /// Judgment log; defaults to `judgments.jsonl` beside the plan.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Writes the judgment log as records ordered by pair and annotator.
    Export {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Needed for `--complete-batches`.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        annotator: Option<String>,
        #[arg(long)]
        complete_batches: bool,
    },
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(lp) = &cli.lang_pair {
        config.lang_pair = lp.clone();
    }
    config.validate()?;
    Ok(config)
}

fn print_stages(stages: &[StageReport]) {
    print!("{}", funnel(stages));
}

fn emit<T: Serialize>(format: Format, records: &[T], table: impl FnOnce() -> String) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match format {
        Format::Records => {
            jsonl::write_to(&mut out, None, records).map_err(|e| acs_core::Error::io("<stdout>", e))?;
        }
        Format::Table => {
            out.write_all(table().as_bytes()).map_err(|e| acs_core::Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let config = effective_config(&cli)?;
    match cli.command {
        Command::Run => {
            if cli.config.is_none() {
                return Err(CliError::usage("run needs --config"));
            }
            let summary = run_pipeline(&config)?;
            println!("config {}  seed {}", summary.config_hash, summary.seed);
            print_stages(&summary.stages);
        }
        Command::Ingest {
            input,
            out,
            obscene_list,
            segmenter: seg,
        } => {
            let docs: Vec<RawDocument> = artifact::read(&input, &config)?;
            let obscene = load_obscene(&obscene_list)?;
            let seg = segmenter(seg.as_deref().unwrap_or(&config.backends.segmenter), &config.client_config());
            let (sentences, reports) = ingest_stage(&docs, &obscene, seg.as_ref(), &config.thresholds)?;
            artifact::write(&out, &config, "sentences", &sentences)?;
            print_stages(&reports);
        }
        Command::Lid {
            input,
            out,
            manifest,
            mono_lid: mono,
            han,
        } => {
            let sentences: Vec<IngestedSentence> = artifact::read(&input, &config)?;
            let mode = if han { LidMode::Han } else { config.backends.lid };
            let manifest = manifest.or(config.paths.lexicon_manifest.clone());
            let lexicons = match (mode, manifest) {
                (LidMode::Wordlist, Some(m)) => Some(load_lexicons(&m, &config.lang_pair)?),
                (LidMode::Wordlist, None) => return Err(CliError::usage("lid needs --manifest or --han")),
                (LidMode::Han, _) => None,
            };
            let mono = mono_lid(mono.as_deref().unwrap_or(&config.backends.mono_lid), &config.client_config());
            let settings = LidSettings {
                mode,
                lexicons: lexicons.as_ref(),
                mono: mono.as_deref(),
                ne_fraction: config.thresholds.ne_fraction,
                max_unknown_fraction: config.thresholds.max_unknown_fraction,
            };
            let (cs, report) = lid_stage(sentences, &settings)?;
            artifact::write(&out, &config, "cs_sentences", &cs)?;
            print_stages(&[report]);
        }
        Command::Bundle(BundleCommand::Validate { input }) => bundle_validate(&input, &config)?,
        Command::Bundle(BundleCommand::Gate { input, out }) => {
            let bundles: Vec<AnnotationBundle> = artifact::read(&input, &config)?;
            let mut report = StageReport {
                stage: "bundle".into(),
                unit: "bundles".into(),
                input: bundles.len(),
                output: 0,
                rejected: BTreeMap::new(),
                discarded: BTreeMap::new(),
            };
            let mut kept = Vec::new();
            for b in bundles {
                let id = b.id.clone();
                match gate_bundle(b, config.thresholds.min_translation_distance)
                    .map_err(|e| e.in_stage("bundle", id))?
                {
                    Ok(b) => kept.push(b),
                    Err(reason) => *report.rejected.entry(reason.into()).or_insert(0) += 1,
                }
            }
            report.output = kept.len();
            artifact::write(&out, &config, "bundles", &kept)?;
            print_stages(&[report]);
        }
        Command::Genpairs {
            bundles,
            out,
            cap,
            mwes,
        } => {
            let all: Vec<AnnotationBundle> = artifact::read(&bundles, &config)?;
            let mut other = 0;
            let selected: Vec<AnnotationBundle> = match &cli.lang_pair {
                Some(lp) => all
                    .into_iter()
                    .filter(|b| {
                        let keep = b.lang_pair == *lp;
                        other += usize::from(!keep);
                        keep
                    })
                    .collect(),
                None => all,
            };
            let mwes = load_mwes(mwes.as_deref().or(config.paths.mwes.as_deref()))?;
            let gen = GenerationConfig {
                seed: config.seed,
                cap: cap.unwrap_or(config.thresholds.cap),
                min_translation_distance: config.thresholds.min_translation_distance,
            };
            let (pairs, mut report) = genpairs_stage(selected, &mwes, &gen);
            if other > 0 {
                report.input += other;
                report.rejected.insert("other_lang_pair".into(), other);
            }
            artifact::write(&out, &config, "pairs", &pairs)?;
            print_stages(&[report]);
        }
        Command::Score {
            pairs,
            endpoint,
            scores,
            out,
            kind,
            batch_size,
        } => {
            let pairs: Vec<MinimalPair> = artifact::read(&pairs, &config)?;
            let backend: Box<dyn ScorerBackend> = match (endpoint, scores) {
                (Some(url), _) => Box::new(
                    EndpointScorer::new(url, kind.into(), config.client_config())
                        .with_batch_size(batch_size.unwrap_or(config.backends.score_batch_size)),
                ),
                (None, Some(path)) => Box::new(FileScorer::load(&path, kind.into())?),
                (None, None) => return Err(CliError::usage("score needs --endpoint or --scores")),
            };
            let (scored, report) = score_stage(&pairs, backend.as_ref());
            artifact::write(&out, &config, "scores", &scored)?;
            print_stages(&[report]);
        }
        Command::Stats(cmd) => stats(cmd, &config)?,
        Command::Judge(cmd) => judge(cmd, &config)?,
    }
    Ok(())
}

fn bundle_validate(input: &Path, config: &PipelineConfig) -> Result<()> {
    let bundles: Vec<AnnotationBundle> = artifact::read(input, config)?;
    let total = bundles.len();
    let mut invalid = 0;
    for b in bundles {
        let id = b.id.clone();
        if let Err(e) = validate_bundle(b) {
            invalid += 1;
            eprintln!("{id}: {e}");
        }
    }
    println!("{} of {total} bundles valid", total - invalid);
    if invalid > 0 {
        return Err(CliError::data(format!("{invalid} invalid bundles in {}", input.display())));
    }
    Ok(())
}

fn perm_config(opts: &StatsOpts, config: &PipelineConfig) -> PermutationConfig {
    PermutationConfig {
        resamples: opts.resamples.unwrap_or(config.thresholds.resamples),
        alpha: opts.alpha.unwrap_or(config.thresholds.alpha),
        seed: config.seed,
        mode: match opts.mode {
            ModeArg::Auto => Mode::Auto,
            ModeArg::Exact => Mode::Exact,
            ModeArg::MonteCarlo => Mode::MonteCarlo,
        },
    }
}

/// Scores from a scored-pair artifact (JSON lines) or a whitespace score
/// file, keyed by pair id.
fn read_scored(path: &Path, config: &PipelineConfig) -> Result<Vec<ScoredPair>> {
    let text = std::fs::read_to_string(path).map_err(|e| acs_core::Error::io(path, e))?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("//"));
    if first.is_some_and(|l| l.starts_with('{')) {
        return artifact::read(path, config);
    }
    Ok(FileScorer::parse(&text, path)?.scored())
}

/// Plain numbers, one per line, or per-pair margins from scores.
fn read_sample(path: &Path, config: &PipelineConfig) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| acs_core::Error::io(path, e))?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let numeric = lines.iter().all(|(_, l)| l.split_whitespace().count() == 1 && !l.starts_with('{'));
    if !numeric {
        return Ok(read_scored(path, config)?.iter().map(ScoredPair::margin).collect());
    }
    lines
        .iter()
        .map(|(n, l)| {
            l.parse::<f64>().map_err(|_| {
                acs_core::Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: format!("not a number: {l:?}"),
                }
                .into()
            })
        })
        .collect()
}

fn read_judgments(path: &Path) -> Result<Vec<JudgmentRecord>> {
    Ok(jsonl::read(path)?.records)
}

#[derive(Serialize)]
struct TestRecord<'a> {
    test: &'a str,
    n_a: usize,
    n_b: usize,
    #[serde(flatten)]
    result: PermutationResult,
}

fn test_table(r: &TestRecord) -> String {
    let mut t = Table::new(["test", "n_a", "n_b", "statistic", "p", "mode", "permutations", "significant"]);
    t.row([
        r.test.to_string(),
        r.n_a.to_string(),
        r.n_b.to_string(),
        fmt_f(r.result.statistic),
        fmt_f(r.result.p_value),
        format!("{:?}", r.result.mode),
        r.result.permutations.to_string(),
        r.result.significant.to_string(),
    ]);
    t.render()
}

fn stats(cmd: StatsCommand, config: &PipelineConfig) -> Result<()> {
    match cmd {
        StatsCommand::PermPaired { a, b, statistic, opts } => {
            let sa = read_scored(&a, config)?;
            let sb = read_scored(&b, config)?;
            let ids_a: Vec<&str> = sa.iter().map(|s| s.pair_id.as_str()).collect();
            let ids_b: Vec<&str> = sb.iter().map(|s| s.pair_id.as_str()).collect();
            if ids_a != ids_b {
                return Err(CliError::data("paired inputs must score the same pairs"));
            }
            let value = |s: &ScoredPair| match statistic {
                PairedStatistic::Correct => f64::from(u8::from(s.logp_observed > s.logp_manipulated)),
                PairedStatistic::Margin => s.margin(),
            };
            let va: Vec<f64> = sa.iter().map(value).collect();
            let vb: Vec<f64> = sb.iter().map(value).collect();
            let result = paired_permutation_test(&va, &vb, &perm_config(&opts, config))?;
            let rec = TestRecord {
                test: "paired",
                n_a: va.len(),
                n_b: vb.len(),
                result,
            };
            emit(opts.format, std::slice::from_ref(&rec), || test_table(&rec))?;
        }
        StatsCommand::PermUnpaired { a, b, statistic, opts } => {
            let va = read_sample(&a, config)?;
            let vb = read_sample(&b, config)?;
            let stat = match statistic {
                UnpairedArg::Mean => UnpairedStatistic::MeanDifference,
                UnpairedArg::Median => UnpairedStatistic::MedianDifference,
            };
            let result = unpaired_permutation_test_with(&va, &vb, stat, &perm_config(&opts, config))?;
            let rec = TestRecord {
                test: "unpaired",
                n_a: va.len(),
                n_b: vb.len(),
                result,
            };
            emit(opts.format, std::slice::from_ref(&rec), || test_table(&rec))?;
        }
        StatsCommand::Kappa { judgments, opts } => {
            let records = read_judgments(&judgments)?;
            let m = JudgmentMatrix::from_records(&records)?;
            #[derive(Serialize)]
            struct KappaRecord {
                items: usize,
                raters: usize,
                categories: usize,
                kappa: f64,
            }
            let rec = KappaRecord {
                items: m.items(),
                raters: m.raters(),
                categories: m.categories(),
                kappa: fleiss_kappa(&m),
            };
            emit(opts.format, std::slice::from_ref(&rec), || {
                let mut t = Table::new(["items", "raters", "categories", "kappa"]);
                t.row([rec.items.to_string(), rec.raters.to_string(), rec.categories.to_string(), fmt_f(rec.kappa)]);
                t.render()
            })?;
        }
        StatsCommand::Agreement { judgments, pairs, opts } => {
            let records = read_judgments(&judgments)?;
            let pairs: Vec<MinimalPair> = artifact::read(&pairs, config)?;
            let known: HashSet<String> = pairs.into_iter().map(|p| p.pair_id).collect();
            let report = gold_agreement(&records, &known)?;
            emit(opts.format, std::slice::from_ref(&report), || {
                let mut t = Table::new(["annotator", "judged", "observed_chosen", "accuracy"]);
                for (a, acc) in report.per_annotator.iter().chain([(&"pooled".to_string(), &report.pooled)]) {
                    t.row([a.clone(), acc.judged.to_string(), acc.observed_chosen.to_string(), fmt_f(acc.accuracy)]);
                }
                t.render()
            })?;
        }
        StatsCommand::Pos { pairs, scores, opts } => {
            let pairs: Vec<MinimalPair> = artifact::read(&pairs, config)?;
            let scored = read_scored(&scores, config)?;
            let report = pos_margin_analysis(&pairs, &scored, &perm_config(&opts, config))?;
            emit(opts.format, std::slice::from_ref(&report), || {
                let mut t = Table::new(["upos", "class", "count", "mean", "median"]);
                for g in &report.groups {
                    let class = g.class.map(|c| format!("{c:?}").to_lowercase()).unwrap_or_else(|| "-".into());
                    t.row([g.upos.to_string(), class, g.count.to_string(), fmt_f(g.mean), fmt_f(g.median)]);
                }
                let mut s = t.render();
                for (tag, n) in &report.excluded {
                    s.push_str(&format!("excluded {tag}: {n} pairs\n"));
                }
                s.push_str(&format!(
                    "eligible {}  closed {} (mean {})  open {} (mean {})  p {}\n",
                    report.eligible,
                    report.closed_count,
                    fmt_opt(report.closed_mean),
                    report.open_count,
                    fmt_opt(report.open_mean),
                    fmt_opt(report.closed_vs_open_p)
                ));
                s
            })?;
        }
        StatsCommand::Buckets { judgments, scores, opts } => {
            let records = read_judgments(&judgments)?;
            let scored = read_scored(&scores, config)?;
            let report = margin_vs_agreement(&records, &scored, &perm_config(&opts, config))?;
            emit(opts.format, std::slice::from_ref(&report), || {
                let mut t = Table::new(["agreement", "count", "median", "mean", "q1", "q3"]);
                for b in &report.buckets {
                    t.row([
                        format!("{}/{}", b.agreement, report.raters),
                        b.count.to_string(),
                        fmt_f(b.median),
                        fmt_f(b.mean),
                        fmt_f(b.q1),
                        fmt_f(b.q3),
                    ]);
                }
                let mut s = t.render();
                let mut c = Table::new(["a", "b", "median_p", "mean_p"]);
                for x in &report.comparisons {
                    c.row([x.a.to_string(), x.b.to_string(), fmt_f(x.median_p), fmt_f(x.mean_p)]);
                }
                s.push_str(&c.render());
                if !report.absent.is_empty() {
                    s.push_str(&format!("absent levels: {:?}\n", report.absent));
                }
                s
            })?;
        }
    }
    Ok(())
}

fn judge(cmd: JudgeCommand, config: &PipelineConfig) -> Result<()> {
    match cmd {
        JudgeCommand::Plan {
            pairs,
            pool,
            k,
            batch_size,
            out,
        } => {
            let pairs: Vec<MinimalPair> = artifact::read(&pairs, config)?;
            let ids: Vec<String> = pairs.into_iter().map(|p| p.pair_id).collect();
            let mut plan: Plan = plan_assignments(
                &ids,
                &pool,
                k,
                config.seed,
                batch_size.unwrap_or(config.thresholds.batch_size),
            )?;
            plan.issue_tokens();
            save_plan(&out, &plan)?;
            let mut t = Table::new(["annotator", "pairs", "batches", "token"]);
            for a in &plan.pool {
                let batches: Vec<_> = plan.batches_of(a).collect();
                t.row([
                    a.clone(),
                    batches.iter().map(|b| b.pair_ids.len()).sum::<usize>().to_string(),
                    batches.len().to_string(),
                    plan.tokens[a].clone(),
                ]);
            }
            print!("{}", t.render());
        }
        JudgeCommand::Serve {
            pairs,
            plan,
            log,
            port,
            host,
        } => {
            let pairs: Vec<MinimalPair> = artifact::read(&pairs, config)?;
            let texts: Vec<PairTexts> = pairs.iter().map(PairTexts::from).collect();
            let log = log.unwrap_or_else(|| plan.with_file_name("judgments.jsonl"));
            let service = JudgeService::new(texts, Some(&plan), &log)?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| CliError::usage(format!("address {host}:{port}: {e}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::data(e.to_string()))?;
            rt.block_on(acs_judge::server::serve(Arc::new(service), addr))
                .map_err(|e| CliError::data(format!("serve {addr}: {e}")))?;
        }
        JudgeCommand::Export {
            log,
            out,
            plan,
            annotator,
            complete_batches,
        } => {
            let records = acs_judge::store::load(&log)?;
            let plan = plan.as_deref().map(load_plan).transpose()?;
            if complete_batches && plan.is_none() {
                return Err(CliError::usage("--complete-batches needs --plan"));
            }
            let filter = ExportFilter {
                annotator,
                complete_batches,
            };
            let selected = filter_records(&records, plan.as_ref(), &filter);
            jsonl::write(&out, None, &selected)?;
            println!("{} judgments written to {}", selected.len(), out.display());
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and maps the outcome to an exit
/// code: 0 ok, 1 usage, 2 data, 3 backend.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
