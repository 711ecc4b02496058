//! The pipeline stages and their funnel reports.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use acs_core::backend::ClientConfig;
use acs_core::bundle::{ner_override, residue_rejection, validate_bundle, AnnotationBundle, MweLexicon};
use acs_core::ingest::{
    length_gate_with, normalize, obscenity_gate, segment, Domain, FallbackSegmenter, HttpSegmenter,
    ObsceneLexicon, RawDocument, SegmentationBackend,
};
use acs_core::jsonl::read_lines;
use acs_core::lid::{
    consistency_check, cs_qualification, diacritic_gate, han_lid, load_lexicons,
    mark_named_entity_runs_with, reassign_borrowings, tag_tokens, unknown_gate_with, HttpMonoLid,
    LexiconSet, MonoLidBackend, TrigramLid,
};
use acs_core::pairgen::{generate, is_integrative, GenerationConfig, MinimalPair};
use acs_core::scoring::{
    accuracy, score_pairs, EndpointScorer, FileScorer, ScoreRequest, ScoredPair, ScorerBackend,
};
use acs_core::sentence::tokenize;
use acs_core::stats::{mean, median, pos_margin_analysis, PermutationConfig, PosReport};
use acs_core::{CsSentence, SentenceRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::config::{LidMode, PipelineConfig, Thresholds};
use crate::error::{CliError, Result, StageContext};

/// Input, output and removal counts of one stage. Removal counts always
/// sum to `input - output`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub unit: String,
    pub input: usize,
    pub output: usize,
    pub rejected: BTreeMap<String, usize>,
    /// Candidate manipulations removed inside surviving items, by rule.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub discarded: BTreeMap<String, usize>,
}

impl StageReport {
    fn new(stage: &str, unit: &str, input: usize) -> Self {
        Self {
            stage: stage.into(),
            unit: unit.into(),
            input,
            output: 0,
            rejected: BTreeMap::new(),
            discarded: BTreeMap::new(),
        }
    }

    fn reject(&mut self, reason: &str) {
        *self.rejected.entry(reason.to_string()).or_insert(0) += 1;
    }

    fn finish(mut self, output: usize) -> Self {
        self.output = output;
        self.rejected.retain(|_, n| *n > 0);
        self.discarded.retain(|_, n| *n > 0);
        debug_assert!(self.is_balanced(), "{self:?}");
        self
    }

    pub fn is_balanced(&self) -> bool {
        self.rejected.values().sum::<usize>() + self.output == self.input
    }
}

/// A sentence that passed the ingest gates, with its document's metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestedSentence {
    #[serde(flatten)]
    pub sentence: SentenceRecord,
    pub lang_claim: String,
    pub domain: Domain,
}

pub fn segmenter(spec: &str, client: &ClientConfig) -> Box<dyn SegmentationBackend> {
    match spec {
        "fallback" => Box::new(FallbackSegmenter),
        url => Box::new(HttpSegmenter::new(url, client.clone())),
    }
}

pub fn mono_lid(spec: &str, client: &ClientConfig) -> Option<Box<dyn MonoLidBackend>> {
    match spec {
        "none" => None,
        "trigram" => Some(Box::new(TrigramLid::bundled())),
        url => Some(Box::new(HttpMonoLid::new(url, client.clone()))),
    }
}

pub fn load_obscene(path: &Path) -> Result<ObsceneLexicon> {
    Ok(ObsceneLexicon::new(read_lines(path)?))
}

pub fn load_mwes(path: Option<&Path>) -> Result<MweLexicon> {
    match path {
        Some(p) => Ok(MweLexicon::new(read_lines(p)?)),
        None => Ok(MweLexicon::default()),
    }
}

/// Normalises, applies the document-level obscenity gate, segments and
/// applies the length gate. Returns the document and sentence reports.
pub fn ingest_stage(
    docs: &[RawDocument],
    obscene: &ObsceneLexicon,
    segmenter: &dyn SegmentationBackend,
    t: &Thresholds,
) -> Result<(Vec<IngestedSentence>, [StageReport; 2])> {
    let mut seen = HashSet::new();
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(CliError::data("duplicate document id").in_stage("ingest", &d.id));
        }
        if d.text.trim().is_empty() {
            return Err(CliError::data("empty document text").in_stage("ingest", &d.id));
        }
    }
    let mut doc_report = StageReport::new("ingest", "documents", docs.len());
    let mut segmented = Vec::new();
    for d in docs {
        let text = normalize(&d.text);
        if !obscenity_gate(&tokenize(&text), obscene) {
            doc_report.reject("obscene");
            continue;
        }
        let sentences = segment(&d.id, &text, segmenter).in_stage("ingest", &d.id)?;
        segmented.push((d, sentences));
    }
    let doc_report = doc_report.finish(segmented.len());

    let total = segmented.iter().map(|(_, s)| s.len()).sum();
    let mut sent_report = StageReport::new("ingest", "sentences", total);
    let mut out = Vec::new();
    for (d, sentences) in segmented {
        for s in sentences {
            if s.char_len() > t.max_chars {
                sent_report.reject("too_long");
            } else if !length_gate_with(&s, t.max_chars, t.min_tokens) {
                sent_report.reject("too_short");
            } else {
                out.push(IngestedSentence {
                    sentence: s,
                    lang_claim: d.lang_claim.clone(),
                    domain: d.domain,
                });
            }
        }
    }
    let sent_report = sent_report.finish(out.len());
    Ok((out, [doc_report, sent_report]))
}

pub struct LidSettings<'a> {
    pub mode: LidMode,
    pub lexicons: Option<&'a LexiconSet>,
    pub mono: Option<&'a dyn MonoLidBackend>,
    pub ne_fraction: f64,
    pub max_unknown_fraction: f64,
}

/// Labels one sentence: wordlist lookup, borrowing reassignment and named
/// entity runs, or the Han character rule.
pub fn label(sentence: SentenceRecord, settings: &LidSettings) -> Result<CsSentence> {
    match settings.mode {
        LidMode::Han => Ok(han_lid(sentence)),
        LidMode::Wordlist => {
            let lex = settings
                .lexicons
                .ok_or_else(|| CliError::usage("wordlist labeling needs a lexicon manifest"))?;
            let cs = reassign_borrowings(tag_tokens(sentence, lex), lex);
            Ok(mark_named_entity_runs_with(cs, settings.ne_fraction))
        }
    }
}

fn lid_one(s: IngestedSentence, settings: &LidSettings) -> Result<Result<CsSentence, &'static str>> {
    let cs = label(s.sentence, settings)?;
    if !unknown_gate_with(&cs, settings.max_unknown_fraction) {
        return Ok(Err("unknown_words"));
    }
    if let Some(lex) = settings.lexicons {
        if settings.mode == LidMode::Wordlist && !diacritic_gate(&cs, lex) {
            return Ok(Err("diacritic"));
        }
    }
    if let Some(mono) = settings.mono {
        if !consistency_check(&cs, mono, &s.lang_claim)? {
            return Ok(Err("lid_mismatch"));
        }
    }
    if !cs_qualification(&cs) {
        return Ok(Err("not_code_switched"));
    }
    Ok(Ok(cs))
}

pub fn lid_stage(
    sentences: Vec<IngestedSentence>,
    settings: &LidSettings,
) -> Result<(Vec<CsSentence>, StageReport)> {
    let mut report = StageReport::new("lid", "sentences", sentences.len());
    let results: Vec<(String, Result<Result<CsSentence, &'static str>>)> = sentences
        .into_par_iter()
        .map(|s| (s.sentence.id(), lid_one(s, settings)))
        .collect();
    let mut out = Vec::new();
    for (id, r) in results {
        match r.in_stage("lid", id)? {
            Ok(cs) => out.push(cs),
            Err(reason) => report.reject(reason),
        }
    }
    let report = report.finish(out.len());
    Ok((out, report))
}

/// Validation, named-entity override, translation residue gates and the
/// integrative check for one bundle. Invalid bundles are errors; the other
/// gates give a rejection reason.
pub fn gate_bundle(
    bundle: AnnotationBundle,
    min_translation_distance: usize,
) -> Result<Result<AnnotationBundle, &'static str>> {
    let b = ner_override(validate_bundle(bundle)?);
    if let Some(reason) = residue_rejection(&b, min_translation_distance) {
        return Ok(Err(reason));
    }
    match is_integrative(&b) {
        Ok(true) => Ok(Ok(b)),
        Ok(false) => Ok(Err("not_integrative")),
        Err(_) => Ok(Err("not_code_switched")),
    }
}

/// Joins labeled sentences with their bundles by sentence id and applies
/// [`gate_bundle`]. The sentence's labels replace the bundle's copy.
pub fn bundle_stage(
    sentences: Vec<CsSentence>,
    bundles: Vec<AnnotationBundle>,
    lang_pair: &str,
    min_translation_distance: usize,
) -> Result<(Vec<AnnotationBundle>, StageReport)> {
    let mut by_id: HashMap<String, AnnotationBundle> = HashMap::new();
    for b in bundles {
        let id = b.id.clone();
        if by_id.insert(id.clone(), b).is_some() {
            return Err(CliError::data("duplicate bundle id").in_stage("bundle", id));
        }
    }
    let mut report = StageReport::new("bundle", "sentences", sentences.len());
    let mut out = Vec::new();
    for cs in sentences {
        let id = cs.record.id();
        let Some(mut b) = by_id.remove(&id) else {
            report.reject("no_bundle");
            continue;
        };
        if b.lang_pair != lang_pair {
            return Err(CliError::data(format!("bundle is for {}, run is for {lang_pair}", b.lang_pair))
                .in_stage("bundle", id));
        }
        if b.cs.tokens() != cs.tokens() {
            return Err(CliError::data("bundle tokens differ from the labeled sentence").in_stage("bundle", id));
        }
        b.cs = cs;
        match gate_bundle(b, min_translation_distance).in_stage("bundle", &id)? {
            Ok(b) => out.push(b),
            Err(reason) => report.reject(reason),
        }
    }
    let report = report.finish(out.len());
    Ok((out, report))
}

pub fn genpairs_stage(
    bundles: Vec<AnnotationBundle>,
    mwes: &MweLexicon,
    config: &GenerationConfig,
) -> (Vec<MinimalPair>, StageReport) {
    let outcome = generate(bundles, mwes, config);
    let mut report = StageReport::new("genpairs", "sentences", outcome.sentences_in);
    report.rejected = outcome.rejected;
    report.discarded = outcome.discarded;
    let report = report.finish(outcome.pairs.len());
    (outcome.pairs, report)
}

pub fn scorer(config: &PipelineConfig) -> Result<Box<dyn ScorerBackend>> {
    let b = &config.backends;
    if let Some(url) = &b.scorer {
        return Ok(Box::new(
            EndpointScorer::new(url, b.scorer_kind, config.client_config()).with_batch_size(b.score_batch_size),
        ));
    }
    let path = config.require(&config.paths.scores, "scores")?;
    Ok(Box::new(FileScorer::load(&path, b.scorer_kind)?))
}

pub fn score_stage(pairs: &[MinimalPair], backend: &dyn ScorerBackend) -> (Vec<ScoredPair>, StageReport) {
    let requests: Vec<ScoreRequest> = pairs.iter().map(ScoreRequest::from).collect();
    let outcome = score_pairs(&requests, backend);
    let mut report = StageReport::new("score", "pairs", pairs.len());
    for f in &outcome.failures {
        report.reject(&f.reason);
    }
    let report = report.finish(outcome.scored.len());
    (outcome.scored, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatsRecord {
    Accuracy {
        scorer: String,
        pairs: usize,
        accuracy: f64,
        mean_margin: f64,
        median_margin: f64,
    },
    Pos(PosReport),
}

pub fn stats_stage(
    pairs: &[MinimalPair],
    scored: &[ScoredPair],
    config: &PermutationConfig,
) -> Result<Vec<StatsRecord>> {
    let mut by_scorer: BTreeMap<&str, Vec<ScoredPair>> = BTreeMap::new();
    for s in scored {
        by_scorer.entry(&s.scorer).or_default().push(s.clone());
    }
    let mut out = Vec::new();
    for (scorer, group) in &by_scorer {
        let margins: Vec<f64> = group.iter().map(ScoredPair::margin).collect();
        out.push(StatsRecord::Accuracy {
            scorer: scorer.to_string(),
            pairs: group.len(),
            accuracy: accuracy(group)?,
            mean_margin: mean(&margins),
            median_margin: median(&margins),
        });
        out.push(StatsRecord::Pos(pos_margin_analysis(pairs, group, config)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub lang_pair: String,
    pub stages: Vec<StageReport>,
}

pub struct ArtifactPaths {
    pub sentences: PathBuf,
    pub cs: PathBuf,
    pub bundles: PathBuf,
    pub pairs: PathBuf,
    pub scores: PathBuf,
    pub stats: PathBuf,
    pub summary: PathBuf,
}

impl ArtifactPaths {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            sentences: out_dir.join("sentences.jsonl"),
            cs: out_dir.join("cs.jsonl"),
            bundles: out_dir.join("bundles.jsonl"),
            pairs: out_dir.join("pairs.jsonl"),
            scores: out_dir.join("scores.jsonl"),
            stats: out_dir.join("stats.jsonl"),
            summary: out_dir.join("summary.json"),
        }
    }
}

/// Runs the enabled stages in order. A stage whose predecessor is disabled
/// reads that predecessor's artifact from the output directory. Each
/// stage's artifact is written as soon as the stage finishes.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Summary> {
    config.validate()?;
    let paths = ArtifactPaths::new(&config.out_dir);
    let st = &config.stages;
    let t = &config.thresholds;
    let client = config.client_config();
    let mut reports = Vec::new();

    let mut sentences: Option<Vec<IngestedSentence>> = None;
    if st.ingest {
        let docs_path = config.require(&config.paths.documents, "documents")?;
        let docs: Vec<RawDocument> = artifact::read(&docs_path, config).in_stage("ingest", docs_path.display().to_string())?;
        let obscene_path = config.require(&config.paths.obscene_list, "obscene_list")?;
        let obscene = load_obscene(&obscene_path).in_stage("ingest", obscene_path.display().to_string())?;
        let seg = segmenter(&config.backends.segmenter, &client);
        let (out, stage_reports) = ingest_stage(&docs, &obscene, seg.as_ref(), t)?;
        artifact::write(&paths.sentences, config, "sentences", &out)?;
        reports.extend(stage_reports);
        sentences = Some(out);
    }

    let mut cs: Option<Vec<CsSentence>> = None;
    if st.lid {
        let input = match sentences.take() {
            Some(s) => s,
            None => artifact::read(&paths.sentences, config).in_stage("lid", paths.sentences.display().to_string())?,
        };
        let lexicons = match config.backends.lid {
            LidMode::Wordlist => {
                let manifest = config.require(&config.paths.lexicon_manifest, "lexicon_manifest")?;
                Some(load_lexicons(&manifest, &config.lang_pair).in_stage("lid", manifest.display().to_string())?)
            }
            LidMode::Han => None,
        };
        let mono = mono_lid(&config.backends.mono_lid, &client);
        let settings = LidSettings {
            mode: config.backends.lid,
            lexicons: lexicons.as_ref(),
            mono: mono.as_deref(),
            ne_fraction: t.ne_fraction,
            max_unknown_fraction: t.max_unknown_fraction,
        };
        let (out, report) = lid_stage(input, &settings)?;
        artifact::write(&paths.cs, config, "cs_sentences", &out)?;
        reports.push(report);
        cs = Some(out);
    }

    let mut bundles: Option<Vec<AnnotationBundle>> = None;
    if st.bundle {
        let input = match cs.take() {
            Some(c) => c,
            None => artifact::read(&paths.cs, config).in_stage("bundle", paths.cs.display().to_string())?,
        };
        let bundle_path = config.require(&config.paths.bundles, "bundles")?;
        let all: Vec<AnnotationBundle> =
            artifact::read(&bundle_path, config).in_stage("bundle", bundle_path.display().to_string())?;
        let (out, report) = bundle_stage(input, all, &config.lang_pair, t.min_translation_distance)?;
        artifact::write(&paths.bundles, config, "bundles", &out)?;
        reports.push(report);
        bundles = Some(out);
    }

    let mut pairs: Option<Vec<MinimalPair>> = None;
    if st.genpairs {
        let input = match bundles.take() {
            Some(b) => b,
            None => artifact::read(&paths.bundles, config).in_stage("genpairs", paths.bundles.display().to_string())?,
        };
        let mwes = load_mwes(config.paths.mwes.as_deref()).in_stage("genpairs", "mwes")?;
        let gen = GenerationConfig {
            seed: config.seed,
            cap: t.cap,
            min_translation_distance: t.min_translation_distance,
        };
        let (out, report) = genpairs_stage(input, &mwes, &gen);
        artifact::write(&paths.pairs, config, "pairs", &out)?;
        reports.push(report);
        pairs = Some(out);
    }

    let load_pairs = |stage: &'static str, pairs: Option<Vec<MinimalPair>>| -> Result<Vec<MinimalPair>> {
        match pairs {
            Some(p) => Ok(p),
            None => artifact::read(&paths.pairs, config).in_stage(stage, paths.pairs.display().to_string()),
        }
    };

    let mut scored: Option<Vec<ScoredPair>> = None;
    if st.score {
        let input = load_pairs("score", pairs.take())?;
        let backend = scorer(config).in_stage("score", "scorer")?;
        let (out, report) = score_stage(&input, backend.as_ref());
        artifact::write(&paths.scores, config, "scores", &out)?;
        reports.push(report);
        pairs = Some(input);
        scored = Some(out);
    }

    if st.stats {
        let input = load_pairs("stats", pairs.take())?;
        let scored = match scored.take() {
            Some(s) => s,
            None => artifact::read(&paths.scores, config).in_stage("stats", paths.scores.display().to_string())?,
        };
        let perm = PermutationConfig {
            resamples: t.resamples,
            alpha: t.alpha,
            seed: config.seed,
            ..Default::default()
        };
        let records = stats_stage(&input, &scored, &perm).in_stage("stats", "report")?;
        artifact::write(&paths.stats, config, "stats", &records)?;
    }

    let summary = Summary {
        config_hash: config.hash(),
        seed: config.seed,
        lang_pair: config.lang_pair.clone(),
        stages: reports,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(acs_core::Error::from)? + "\n";
    std::fs::create_dir_all(&config.out_dir).map_err(|e| acs_core::Error::io(&config.out_dir, e))?;
    std::fs::write(&paths.summary, text).map_err(|e| acs_core::Error::io(&paths.summary, e))?;
    Ok(summary)
}
