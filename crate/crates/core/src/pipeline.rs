//! Stage-oriented pipeline orchestration.
//!
//! Seven stages run in a fixed order: ingest, paraphrase, quiz, query,
//! score, analyze, report. Each stage records content hashes of its inputs
//! and outputs in a state file; a stage whose recorded hashes still match
//! is skipped, which makes reruns idempotent and interrupted runs
//! resumable. The expensive network stages additionally consult their
//! append-only caches, so resuming never repeats a completed provider call.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::corpus::{
    self, membership_for_date, read_document_meta, read_manifest, read_paragraph_store,
    trigram_stats, AccessLabel, DocumentMeta, ManifestEntry, ModelSpec, ParagraphRecord,
};
use crate::paraphrase::{
    parse_paraphrase_response, read_paraphrase_cache, ParaphraseCacheRecord, ParaphraseSet,
    ParaphraseStatus, ValidatedParaphraseSet, MAX_RETRIES,
};
use crate::provider::{MockClient, Provider, ProviderConfig, ProviderError, QuizFailure, QuizJob};
use crate::quiz::{enumerate_permutations, QuizRecord, QuizResult};
use crate::report::{
    emit_report, read_analysis, write_analysis, Analysis, AurocCell, ModelAnalysis, PooledCell,
    SampleCell, TrigramTable,
};
use crate::scoring::{guess_rate, ScoreRecord};
use crate::simulator::{synth_corpus, SyntheticConfig};
use crate::stats::{
    auroc, balanced_auroc, flat_bootstrap_ci, hierarchical_bootstrap_ci, papers_method_auroc,
    AccessSplit, AurocMethod, AurocReport, BalanceBase, BookGroup, StatsError,
};
use crate::{derive_rng, jsonl};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("stage {stage}: input missing: {path} (run the earlier stages first)")]
    StageInputMissing { stage: &'static str, path: PathBuf },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync + 'static>,
    },
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("run cancelled during stage {stage}")]
    Cancelled { stage: &'static str },
}

fn stage_err<E: std::error::Error + Send + Sync + 'static>(
    stage: &'static str,
) -> impl FnOnce(E) -> PipelineError {
    move |source| PipelineError::Stage {
        stage,
        source: Box::new(source),
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Paraphrase,
    Quiz,
    Query,
    Score,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Paraphrase,
        Stage::Quiz,
        Stage::Query,
        Stage::Score,
        Stage::Analyze,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Paraphrase => "paraphrase",
            Stage::Quiz => "quiz",
            Stage::Query => "query",
            Stage::Score => "score",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// One target model entry in the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    pub cutoff_date: chrono::NaiveDate,
    /// Key into [`RunConfig::providers`].
    pub provider: String,
}

impl ModelEntry {
    pub fn spec(&self) -> ModelSpec {
        ModelSpec::new(&self.name, self.cutoff_date, &self.provider)
    }
}

fn default_low_coverage() -> u32 {
    crate::scoring::LOW_COVERAGE_MIN
}

fn default_balanced_subsets() -> usize {
    crate::stats::BALANCED_SUBSETS
}

fn default_bootstrap_samples() -> usize {
    crate::stats::BOOTSTRAP_SAMPLES
}

/// Run configuration, stored as a single JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Corpus manifest (one JSON record per document).
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    #[serde(default = "default_low_coverage")]
    pub low_coverage_min: u32,
    #[serde(default = "default_balanced_subsets")]
    pub balanced_subsets: usize,
    #[serde(default = "default_bootstrap_samples")]
    pub bootstrap_samples: usize,
    /// Provider key used for paraphrase generation.
    pub paraphrase_provider: String,
    pub models: Vec<ModelEntry>,
    pub providers: BTreeMap<String, ProviderConfig>,
    /// Present for simulator-backed runs; consumed by the simulate command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("cannot parse {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| {
                PipelineError::Config(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
        let json = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, json + "\n")
            .map_err(|e| PipelineError::Config(format!("cannot write {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.models.is_empty() {
            return Err(PipelineError::Config("no target models configured".into()));
        }
        if !self.providers.contains_key(&self.paraphrase_provider) {
            return Err(PipelineError::Config(format!(
                "paraphrase provider {:?} not found in providers",
                self.paraphrase_provider
            )));
        }
        for model in &self.models {
            if !self.providers.contains_key(&model.provider) {
                return Err(PipelineError::Config(format!(
                    "model {:?} references unknown provider {:?}",
                    model.name, model.provider
                )));
            }
            model
                .spec()
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if let Some(synth) = &self.synthetic {
            synth
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// A self-contained simulator-backed configuration: mock target and
    /// paraphrase providers wired to the synthetic corpus parameters, with
    /// the manifest pointing into `out_dir/corpus`.
    pub fn synthetic(out_dir: &Path, synth: SyntheticConfig) -> RunConfig {
        let behavior = crate::provider::MockBehavior::Synthetic {
            p_member: synth.p_member,
            p_nonmember: synth.p_nonmember,
            p_public_boost: synth.p_public_boost,
            seed: synth.seed,
        };
        let target = ProviderConfig::mock_with(behavior.clone(), "synthetic-target");
        let mut paraphraser = ProviderConfig::mock_with(behavior, "synthetic-paraphraser");
        paraphraser.settings = crate::provider::RequestSettings::paraphrase_defaults();
        let mut providers = BTreeMap::new();
        providers.insert("mock-target".to_string(), target);
        providers.insert("mock-paraphraser".to_string(), paraphraser);
        RunConfig {
            manifest: out_dir.join("corpus/manifest.jsonl"),
            out_dir: out_dir.to_path_buf(),
            seed: synth.seed,
            low_coverage_min: default_low_coverage(),
            balanced_subsets: default_balanced_subsets(),
            bootstrap_samples: default_bootstrap_samples(),
            paraphrase_provider: "mock-paraphraser".to_string(),
            models: vec![ModelEntry {
                name: "synthetic-target".to_string(),
                cutoff_date: crate::simulator::SYNTHETIC_CUTOFF
                    .parse()
                    .expect("valid date"),
                provider: "mock-target".to_string(),
            }],
            providers,
            synthetic: Some(synth),
        }
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

/// All file locations of one run, derived from the output directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    out_dir: PathBuf,
}

impl RunPaths {
    pub fn new(out_dir: &Path) -> Self {
        RunPaths {
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn synthetic_manifest(&self) -> PathBuf {
        self.out_dir.join("corpus/manifest.jsonl")
    }

    pub fn synthetic_chapter(&self, doc_id: &str, chapter_index: u32) -> PathBuf {
        self.out_dir
            .join(format!("corpus/chapters/{doc_id}/ch{chapter_index:02}.txt"))
    }

    pub fn documents(&self) -> PathBuf {
        self.out_dir.join("data/documents.jsonl")
    }

    pub fn paragraphs(&self) -> PathBuf {
        self.out_dir.join("data/paragraphs.jsonl")
    }

    pub fn paraphrases(&self) -> PathBuf {
        self.out_dir.join("data/paraphrases.jsonl")
    }

    pub fn quizzes(&self) -> PathBuf {
        self.out_dir.join("data/quizzes.jsonl")
    }

    pub fn results(&self, model: &str) -> PathBuf {
        self.out_dir
            .join(format!("data/results_{}.jsonl", sanitize(model)))
    }

    pub fn failures(&self, model: &str) -> PathBuf {
        self.out_dir
            .join(format!("data/failures_{}.jsonl", sanitize(model)))
    }

    pub fn scores(&self, model: &str) -> PathBuf {
        self.out_dir
            .join(format!("data/scores_{}.jsonl", sanitize(model)))
    }

    pub fn paraphrase_cache(&self) -> PathBuf {
        self.out_dir.join("caches/paraphrase_cache.jsonl")
    }

    pub fn response_cache(&self, model: &str) -> PathBuf {
        self.out_dir
            .join(format!("caches/responses_{}.jsonl", sanitize(model)))
    }

    pub fn analysis(&self) -> PathBuf {
        self.out_dir.join("analysis/analysis.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out_dir.join("report")
    }

    pub fn stage_state(&self, stage: Stage) -> PathBuf {
        self.out_dir.join(format!("state/{}.json", stage.name()))
    }

    pub fn run_manifest(&self) -> PathBuf {
        self.out_dir.join("run_manifest.json")
    }
}

/// Recorded input/output hashes of one completed stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub completed_at: DateTime<Utc>,
    pub skipped: bool,
    /// path (or the pseudo-input "config") -> sha256
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Written at the end of every run; a completed run's manifest plus the
/// caches suffice to reproduce the run bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub stages: BTreeMap<String, StageRecord>,
}

fn file_hash(path: &Path) -> Result<String, std::io::Error> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn value_hash(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

fn hash_paths(
    stage: &'static str,
    paths: &[PathBuf],
) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut hashes = BTreeMap::new();
    for path in paths {
        if !path.exists() {
            return Err(PipelineError::StageInputMissing {
                stage,
                path: path.clone(),
            });
        }
        let hash = file_hash(path).map_err(stage_err(stage))?;
        hashes.insert(path.display().to_string(), hash);
    }
    Ok(hashes)
}

fn load_stage_state(path: &Path) -> Option<StageRecord> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn save_stage_state(path: &Path, record: &StageRecord) -> Result<(), std::io::Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(
        path,
        serde_json::to_string_pretty(record).expect("state serializes"),
    )
}

/// A stage is fresh when its recorded inputs and outputs all still hash to
/// the recorded values.
fn stage_is_fresh(state: &StageRecord, inputs: &BTreeMap<String, String>) -> bool {
    if &state.inputs != inputs {
        return false;
    }
    state.outputs.iter().all(|(path, recorded)| {
        file_hash(Path::new(path))
            .map(|h| &h == recorded)
            .unwrap_or(false)
    })
}

/// Orchestrates a run over one configuration.
pub struct Pipeline {
    config: RunConfig,
    paths: RunPaths,
    mock_overrides: BTreeMap<String, Arc<MockClient>>,
    cancel: Option<Arc<AtomicBool>>,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let paths = RunPaths::new(&config.out_dir);
        Ok(Pipeline {
            config,
            paths,
            mock_overrides: BTreeMap::new(),
            cancel: None,
        })
    }

    /// Routes a provider key to a caller-owned mock (instrumentation, fault
    /// injection) instead of constructing a fresh client.
    pub fn with_mock_override(mut self, provider_key: &str, client: Arc<MockClient>) -> Self {
        self.mock_overrides.insert(provider_key.to_string(), client);
        self
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn paths(&self) -> &RunPaths {
        &self.paths
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Executes the requested stages in canonical order, skipping any whose
    /// recorded state is still fresh, and writes the run manifest.
    pub fn run(&self, stages: &[Stage]) -> Result<RunManifest, PipelineError> {
        let requested: Vec<Stage> = Stage::ALL
            .into_iter()
            .filter(|s| stages.contains(s))
            .collect();
        let mut manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.config.seed,
            config: serde_json::to_value(&self.config).expect("config serializes"),
            stages: BTreeMap::new(),
        };
        for stage in requested {
            let record = self.run_stage(stage)?;
            log::info!(
                "stage {} {}",
                stage.name(),
                if record.skipped {
                    "skipped (fresh)"
                } else {
                    "completed"
                }
            );
            manifest.stages.insert(stage.name().to_string(), record);
        }
        let path = self.paths.run_manifest();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(stage_err("report"))?;
        }
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )
        .map_err(stage_err("report"))?;
        Ok(manifest)
    }

    fn run_stage(&self, stage: Stage) -> Result<StageRecord, PipelineError> {
        match stage {
            Stage::Ingest => self.stage_ingest(),
            Stage::Paraphrase => self.stage_paraphrase(),
            Stage::Quiz => self.stage_quiz(),
            Stage::Query => self.stage_query(),
            Stage::Score => self.stage_score(),
            Stage::Analyze => self.stage_analyze(),
            Stage::Report => self.stage_report(),
        }
    }

    /// Checks freshness; when stale, runs `body` (which returns the output
    /// paths it wrote plus whether the stage completed cleanly) and records
    /// the new state.
    fn run_cached_stage<F>(
        &self,
        stage: Stage,
        input_paths: &[PathBuf],
        config_inputs: serde_json::Value,
        body: F,
    ) -> Result<StageRecord, PipelineError>
    where
        F: FnOnce() -> Result<(Vec<PathBuf>, bool), PipelineError>,
    {
        let name = stage.name();
        let mut inputs = hash_paths(name, input_paths)?;
        if !config_inputs.is_null() {
            inputs.insert("config".to_string(), value_hash(&config_inputs));
        }
        let state_path = self.paths.stage_state(stage);
        if let Some(state) = load_stage_state(&state_path) {
            if stage_is_fresh(&state, &inputs) {
                return Ok(StageRecord {
                    skipped: true,
                    ..state
                });
            }
        }
        let (outputs, complete) = body()?;
        let record = StageRecord {
            completed_at: Utc::now(),
            skipped: false,
            inputs,
            outputs: outputs
                .iter()
                .map(|p| {
                    Ok((
                        p.display().to_string(),
                        file_hash(p).map_err(stage_err(name))?,
                    ))
                })
                .collect::<Result<_, PipelineError>>()?,
        };
        if complete {
            save_stage_state(&state_path, &record).map_err(stage_err(name))?;
        } else {
            // leave no fresh state so the next run retries this stage
            let _ = std::fs::remove_file(&state_path);
        }
        Ok(record)
    }

    fn stage_ingest(&self) -> Result<StageRecord, PipelineError> {
        const STAGE: &str = "ingest";
        let manifest_path = self.config.manifest.clone();
        if !manifest_path.exists() {
            return Err(PipelineError::StageInputMissing {
                stage: STAGE,
                path: manifest_path,
            });
        }
        let entries = read_manifest(&manifest_path).map_err(stage_err(STAGE))?;
        let base_dir = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut input_paths = vec![manifest_path.clone()];
        for entry in &entries {
            for chapter in &entry.chapters {
                input_paths.push(base_dir.join(chapter));
            }
        }
        self.run_cached_stage(Stage::Ingest, &input_paths, serde_json::Value::Null, || {
            let mut metas = Vec::with_capacity(entries.len());
            let mut records = Vec::new();
            for entry in &entries {
                let doc = corpus::load_document(entry, &base_dir).map_err(stage_err(STAGE))?;
                for paragraph in corpus::chunk_paragraphs(&doc) {
                    records.push(ParagraphRecord::from_paragraph(&paragraph));
                }
                metas.push(doc.meta());
            }
            corpus::write_document_meta(&self.paths.documents(), &metas)
                .map_err(stage_err(STAGE))?;
            corpus::write_paragraph_store(&self.paths.paragraphs(), &records)
                .map_err(stage_err(STAGE))?;
            log::info!(
                "ingested {} documents into {} paragraphs",
                metas.len(),
                records.len()
            );
            Ok((vec![self.paths.documents(), self.paths.paragraphs()], true))
        })
    }

    fn provider_for(&self, key: &str, cache_path: &Path) -> Result<Provider, PipelineError> {
        let config = self
            .config
            .providers
            .get(key)
            .cloned()
            .ok_or_else(|| PipelineError::Config(format!("unknown provider {key:?}")))?;
        let provider = if let Some(mock) = self.mock_overrides.get(key) {
            Provider::with_mock(config, Arc::clone(mock), cache_path)
        } else {
            Provider::new(config, cache_path)
        };
        provider.map_err(stage_err("provider"))
    }

    fn stage_paraphrase(&self) -> Result<StageRecord, PipelineError> {
        const STAGE: &str = "paraphrase";
        let paragraphs_path = self.paths.paragraphs();
        let provider_cfg = self
            .config
            .providers
            .get(&self.config.paraphrase_provider)
            .cloned();
        let config_inputs = json!({
            "paraphrase_provider": self.config.paraphrase_provider,
            "provider": provider_cfg,
        });
        self.run_cached_stage(
            Stage::Paraphrase,
            &[paragraphs_path.clone()],
            config_inputs,
            || {
                let paragraphs =
                    read_paragraph_store(&paragraphs_path).map_err(stage_err(STAGE))?;
                let cache_path = self.paths.paraphrase_cache();
                let mut cached: BTreeMap<String, ParaphraseCacheRecord> = BTreeMap::new();
                if cache_path.exists() {
                    for record in read_paraphrase_cache(&cache_path).map_err(stage_err(STAGE))? {
                        cached.insert(record.paragraph_id.clone(), record);
                    }
                }
                let provider = self.provider_for(
                    &self.config.paraphrase_provider,
                    &self.paths.response_cache("paraphraser"),
                )?;
                let mut appender = CacheAppender::open(&cache_path).map_err(stage_err(STAGE))?;
                let mut sets: Vec<ParaphraseSet> = Vec::with_capacity(paragraphs.len());
                let mut dropped = 0usize;
                for record in &paragraphs {
                    if let Some(hit) = cached.get(&record.paragraph_id) {
                        match hit.status {
                            ParaphraseStatus::Ok => {
                                sets.push(hit.set.clone().expect("ok cache records carry sets"));
                            }
                            ParaphraseStatus::Dropped => dropped += 1,
                        }
                        continue;
                    }
                    let paragraph = record.paragraph();
                    let mut outcome: Option<ParaphraseSet> = None;
                    let mut last_raw = String::new();
                    let mut attempts = 0u32;
                    for attempt in 0..=MAX_RETRIES {
                        attempts = attempt + 1;
                        let (_fp, raw) = provider
                            .generate_paraphrase(&paragraph, attempt)
                            .map_err(stage_err(STAGE))?;
                        last_raw = raw;
                        match parse_paraphrase_response(
                            &record.paragraph_id,
                            &record.text,
                            &last_raw,
                        )
                        .and_then(|set| set.validated())
                        {
                            Ok(validated) => {
                                outcome = Some(validated.into_inner());
                                break;
                            }
                            Err(e) => {
                                log::warn!(
                                    "paraphrase attempt {attempt} for {} rejected: {e}",
                                    record.paragraph_id
                                );
                            }
                        }
                    }
                    let cache_record = match &outcome {
                        Some(set) => ParaphraseCacheRecord {
                            paragraph_id: record.paragraph_id.clone(),
                            status: ParaphraseStatus::Ok,
                            attempts,
                            raw_response: last_raw.clone(),
                            set: Some(set.clone()),
                        },
                        None => {
                            dropped += 1;
                            log::warn!(
                                "dropping paragraph {} after {attempts} failed paraphrase attempts",
                                record.paragraph_id
                            );
                            ParaphraseCacheRecord {
                                paragraph_id: record.paragraph_id.clone(),
                                status: ParaphraseStatus::Dropped,
                                attempts,
                                raw_response: last_raw.clone(),
                                set: None,
                            }
                        }
                    };
                    appender.append(&cache_record).map_err(stage_err(STAGE))?;
                    if let Some(set) = outcome {
                        sets.push(set);
                    }
                }
                if dropped > 0 {
                    log::warn!("{dropped} paragraphs have no valid paraphrase set");
                }
                jsonl::write_records(&self.paths.paraphrases(), &sets)
                    .map_err(stage_err(STAGE))?;
                Ok((vec![self.paths.paraphrases()], true))
            },
        )
    }

    fn stage_quiz(&self) -> Result<StageRecord, PipelineError> {
        const STAGE: &str = "quiz";
        let paraphrases_path = self.paths.paraphrases();
        self.run_cached_stage(
            Stage::Quiz,
            &[paraphrases_path.clone()],
            serde_json::Value::Null,
            || {
                let sets: Vec<ParaphraseSet> =
                    jsonl::read_records(&paraphrases_path).map_err(stage_err(STAGE))?;
                let mut records = Vec::with_capacity(sets.len() * 24);
                for set in sets {
                    let validated = set.validated().map_err(stage_err(STAGE))?;
                    for instance in enumerate_permutations(&validated) {
                        records.push(QuizRecord::from_instance(&instance));
                    }
                }
                crate::quiz::write_quiz_store(&self.paths.quizzes(), &records)
                    .map_err(stage_err(STAGE))?;
                log::info!("enumerated {} quiz instances", records.len());
                Ok((vec![self.paths.quizzes()], true))
            },
        )
    }

    fn stage_query(&self) -> Result<StageRecord, PipelineError> {
        const STAGE: &str = "query";
        let input_paths = vec![
            self.paths.quizzes(),
            self.paths.paraphrases(),
            self.paths.paragraphs(),
            self.paths.documents(),
        ];
        let config_inputs = json!({
            "models": self.config.models,
            "providers": self.config.providers,
        });
        self.run_cached_stage(Stage::Query, &input_paths, config_inputs, || {
            let documents =
                read_document_meta(&self.paths.documents()).map_err(stage_err(STAGE))?;
            let paragraphs =
                read_paragraph_store(&self.paths.paragraphs()).map_err(stage_err(STAGE))?;
            let sets: Vec<ParaphraseSet> =
                jsonl::read_records(&self.paths.paraphrases()).map_err(stage_err(STAGE))?;
            let quiz_records =
                crate::quiz::read_quiz_store(&self.paths.quizzes()).map_err(stage_err(STAGE))?;

            let doc_by_id: BTreeMap<&str, Arc<DocumentMeta>> = documents
                .iter()
                .map(|d| (d.doc_id.as_str(), Arc::new(d.clone())))
                .collect();
            let paragraph_by_id: BTreeMap<&str, &ParagraphRecord> = paragraphs
                .iter()
                .map(|p| (p.paragraph_id.as_str(), p))
                .collect();
            let mut set_by_id: BTreeMap<&str, ValidatedParaphraseSet> = BTreeMap::new();
            for set in &sets {
                let validated = set.clone().validated().map_err(stage_err(STAGE))?;
                set_by_id.insert(set.paragraph_id.as_str(), validated);
            }

            let mut outputs = Vec::new();
            let mut all_complete = true;
            for model in &self.config.models {
                let spec = model.spec();
                let provider_cfg = &self.config.providers[&model.provider];
                provider_cfg.validate_for_quiz().map_err(stage_err(STAGE))?;
                let provider =
                    self.provider_for(&model.provider, &self.paths.response_cache(&model.name))?;

                // quiz records eligible for this model
                let mut eligible = Vec::new();
                for record in &quiz_records {
                    let paragraph = paragraph_by_id
                        .get(record.paragraph_id.as_str())
                        .ok_or_else(|| {
                            PipelineError::Config(format!(
                                "quiz {} references unknown paragraph {}",
                                record.quiz_id, record.paragraph_id
                            ))
                        })?;
                    let doc = doc_by_id.get(paragraph.doc_id.as_str()).ok_or_else(|| {
                        PipelineError::Config(format!(
                            "paragraph {} references unknown document {}",
                            record.paragraph_id, paragraph.doc_id
                        ))
                    })?;
                    let membership = membership_for_date(doc.publication_date, &spec);
                    if membership == corpus::MembershipLabel::Excluded {
                        continue;
                    }
                    // paragraphs dropped at the paraphrase stage have no set
                    if !set_by_id.contains_key(record.paragraph_id.as_str()) {
                        continue;
                    }
                    eligible.push((record, paragraph, doc, membership));
                }

                log::info!(
                    "querying {} with {} quiz instances",
                    model.name,
                    eligible.len()
                );
                // materialize option texts in blocks to bound memory
                const BLOCK: usize = 2048;
                let mut results: Vec<QuizResult> = Vec::with_capacity(eligible.len());
                let mut failures: Vec<QuizFailure> = Vec::new();
                for block in eligible.chunks(BLOCK) {
                    let jobs: Vec<QuizJob> = block
                        .iter()
                        .map(|(record, paragraph, doc, membership)| {
                            let set = &set_by_id[record.paragraph_id.as_str()];
                            let instance = crate::quiz::QuizInstance::from_set(
                                set,
                                record.permutation_index,
                            );
                            debug_assert_eq!(instance.quiz_id, record.quiz_id);
                            QuizJob {
                                instance,
                                doc: Arc::clone(doc),
                                membership: *membership,
                                access: paragraph.access_label,
                            }
                        })
                        .collect();
                    let outcomes = provider
                        .batch_submit(&jobs, self.cancel.as_deref())
                        .map_err(|e| match e {
                            ProviderError::Cancelled => PipelineError::Cancelled { stage: STAGE },
                            other => PipelineError::Stage {
                                stage: STAGE,
                                source: Box::new(other),
                            },
                        })?;
                    for outcome in outcomes {
                        match outcome {
                            Ok(result) => results.push(result),
                            Err(failure) => failures.push(failure),
                        }
                    }
                }
                if !failures.is_empty() {
                    log::warn!(
                        "{} of {} quiz submissions failed for {}; rerun to retry them",
                        failures.len(),
                        results.len() + failures.len(),
                        model.name
                    );
                    all_complete = false;
                }
                jsonl::write_records(&self.paths.results(&model.name), &results)
                    .map_err(stage_err(STAGE))?;
                jsonl::write_records(&self.paths.failures(&model.name), &failures)
                    .map_err(stage_err(STAGE))?;
                outputs.push(self.paths.results(&model.name));
                outputs.push(self.paths.failures(&model.name));
            }
            Ok((outputs, all_complete))
        })
    }

    fn stage_score(&self) -> Result<StageRecord, PipelineError> {
        const STAGE: &str = "score";
        let mut input_paths = vec![
            self.paths.quizzes(),
            self.paths.paragraphs(),
            self.paths.documents(),
        ];
        for model in &self.config.models {
            input_paths.push(self.paths.results(&model.name));
        }
        let config_inputs = json!({
            "low_coverage_min": self.config.low_coverage_min,
            "models": self.config.models,
        });
        self.run_cached_stage(Stage::Score, &input_paths, config_inputs, || {
            let documents =
                read_document_meta(&self.paths.documents()).map_err(stage_err(STAGE))?;
            let paragraphs =
                read_paragraph_store(&self.paths.paragraphs()).map_err(stage_err(STAGE))?;
            let quiz_records =
                crate::quiz::read_quiz_store(&self.paths.quizzes()).map_err(stage_err(STAGE))?;
            let doc_by_id: BTreeMap<&str, &DocumentMeta> =
                documents.iter().map(|d| (d.doc_id.as_str(), d)).collect();
            let quiz_to_paragraph: BTreeMap<&str, &str> = quiz_records
                .iter()
                .map(|q| (q.quiz_id.as_str(), q.paragraph_id.as_str()))
                .collect();

            let mut outputs = Vec::new();
            for model in &self.config.models {
                let spec = model.spec();
                let results: Vec<QuizResult> =
                    jsonl::read_records(&self.paths.results(&model.name))
                        .map_err(stage_err(STAGE))?;
                let mut by_paragraph: BTreeMap<&str, Vec<&QuizResult>> = BTreeMap::new();
                for result in &results {
                    let Some(paragraph_id) = quiz_to_paragraph.get(result.quiz_id.as_str())
                    else {
                        log::warn!("result {} references unknown quiz id", result.quiz_id);
                        continue;
                    };
                    by_paragraph.entry(paragraph_id).or_default().push(result);
                }
                let mut records: Vec<ScoreRecord> = Vec::new();
                for paragraph in &paragraphs {
                    let Some(para_results) = by_paragraph.get(paragraph.paragraph_id.as_str())
                    else {
                        continue;
                    };
                    let owned: Vec<QuizResult> =
                        para_results.iter().map(|&r| r.clone()).collect();
                    let gr =
                        guess_rate(&paragraph.paragraph_id, &owned).map_err(stage_err(STAGE))?;
                    let doc = doc_by_id[paragraph.doc_id.as_str()];
                    records.push(ScoreRecord {
                        paragraph_id: gr.paragraph_id,
                        doc_id: paragraph.doc_id.clone(),
                        access_label: paragraph.access_label,
                        membership_label: membership_for_date(doc.publication_date, &spec),
                        n_quizzes: gr.n_quizzes,
                        n_correct: gr.n_correct,
                        rate: gr.rate,
                        low_coverage: gr.n_quizzes < self.config.low_coverage_min,
                    });
                }
                crate::scoring::write_scores(&self.paths.scores(&model.name), &records)
                    .map_err(stage_err(STAGE))?;
                outputs.push(self.paths.scores(&model.name));
            }
            Ok((outputs, true))
        })
    }

    fn stage_analyze(&self) -> Result<StageRecord, PipelineError> {
        const STAGE: &str = "analyze";
        let mut input_paths = vec![self.paths.paragraphs(), self.paths.documents()];
        for model in &self.config.models {
            input_paths.push(self.paths.scores(&model.name));
        }
        let config_inputs = json!({
            "seed": self.config.seed,
            "balanced_subsets": self.config.balanced_subsets,
            "bootstrap_samples": self.config.bootstrap_samples,
            "models": self.config.models,
        });
        self.run_cached_stage(Stage::Analyze, &input_paths, config_inputs, || {
            let analysis = self.compute_analysis()?;
            write_analysis(&self.paths.analysis(), &analysis).map_err(stage_err(STAGE))?;
            Ok((vec![self.paths.analysis()], true))
        })
    }

    fn compute_analysis(&self) -> Result<Analysis, PipelineError> {
        const STAGE: &str = "analyze";
        let documents = read_document_meta(&self.paths.documents()).map_err(stage_err(STAGE))?;
        let paragraphs =
            read_paragraph_store(&self.paths.paragraphs()).map_err(stage_err(STAGE))?;
        let excluded_docs: std::collections::BTreeSet<&str> = documents
            .iter()
            .filter(|d| d.exclude_from_scoring)
            .map(|d| d.doc_id.as_str())
            .collect();
        let word_counts: BTreeMap<&str, usize> = paragraphs
            .iter()
            .map(|p| (p.paragraph_id.as_str(), p.word_count))
            .collect();

        let mut models = Vec::new();
        for model in &self.config.models {
            let scores = crate::scoring::read_scores(&self.paths.scores(&model.name))
                .map_err(stage_err(STAGE))?;
            let selected: Vec<&ScoreRecord> = scores
                .iter()
                .filter(|r| {
                    !r.low_coverage
                        && r.membership_label != corpus::MembershipLabel::Excluded
                        && !excluded_docs.contains(r.doc_id.as_str())
                })
                .collect();
            models.push(self.analyze_model(model, &selected, &word_counts)?);
        }

        let owned: Vec<crate::corpus::Paragraph> =
            paragraphs.iter().map(ParagraphRecord::paragraph).collect();
        let trigram_top = |split: AccessLabel| -> Vec<(String, u64)> {
            trigram_stats(&owned, split).into_iter().take(20).collect()
        };
        Ok(Analysis {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.config.seed,
            models,
            trigrams: TrigramTable {
                public: trigram_top(AccessLabel::Public),
                non_public: trigram_top(AccessLabel::NonPublic),
            },
        })
    }

    fn analyze_model(
        &self,
        model: &ModelEntry,
        selected: &[&ScoreRecord],
        word_counts: &BTreeMap<&str, usize>,
    ) -> Result<ModelAnalysis, PipelineError> {
        let spec = model.spec();
        let sub_seed = |split: AccessSplit, method: AurocMethod| -> u64 {
            use rand::Rng;
            derive_rng(
                self.config.seed,
                &[
                    b"analysis",
                    model.name.as_bytes(),
                    split.label().as_bytes(),
                    method.label().as_bytes(),
                ],
            )
            .gen()
        };

        let mut auroc_cells = Vec::new();
        for split in AccessSplit::ALL_SPLITS {
            let (mut para_pos, mut para_neg) = (Vec::new(), Vec::new());
            let mut books: BTreeMap<&str, (bool, Vec<f64>)> = BTreeMap::new();
            for record in selected {
                if !split.matches(record.access_label) {
                    continue;
                }
                let positive =
                    record.membership_label == corpus::MembershipLabel::PotentialMember;
                if positive {
                    para_pos.push(record.rate);
                } else {
                    para_neg.push(record.rate);
                }
                books
                    .entry(record.doc_id.as_str())
                    .or_insert_with(|| (positive, Vec::new()))
                    .1
                    .push(record.rate);
            }
            let book_groups: Vec<BookGroup> = books
                .iter()
                .map(|(doc_id, (positive, rates))| BookGroup {
                    doc_id: doc_id.to_string(),
                    positive: *positive,
                    rates: rates.clone(),
                })
                .collect();
            let mut book_pos = Vec::new();
            let mut book_neg = Vec::new();
            for group in &book_groups {
                let mean = group.rates.iter().sum::<f64>() / group.rates.len() as f64;
                if group.positive {
                    book_pos.push(mean);
                } else {
                    book_neg.push(mean);
                }
            }

            let mut push_cell = |method: AurocMethod,
                                 value: Result<f64, StatsError>,
                                 ci: Option<(f64, f64)>,
                                 n_pos: usize,
                                 n_neg: usize,
                                 seed: u64| {
                match value {
                    Ok(value) => auroc_cells.push(AurocCell::from_report(AurocReport {
                        method,
                        split,
                        value,
                        ci,
                        n_pos,
                        n_neg,
                        seed,
                    })),
                    Err(_) => {
                        auroc_cells.push(AurocCell::degenerate(method, split, n_pos, n_neg))
                    }
                }
            };

            let seed_pl = sub_seed(split, AurocMethod::ParagraphLevel);
            let pl_ci = flat_bootstrap_ci(
                &para_pos,
                &para_neg,
                self.config.bootstrap_samples,
                0.95,
                seed_pl,
            )
            .ok()
            .map(|ci| (ci.low, ci.high));
            push_cell(
                AurocMethod::ParagraphLevel,
                auroc(&para_pos, &para_neg),
                pl_ci,
                para_pos.len(),
                para_neg.len(),
                seed_pl,
            );

            let seed_bl = sub_seed(split, AurocMethod::BookLevel);
            let bl_ci = hierarchical_bootstrap_ci(
                &book_groups,
                self.config.bootstrap_samples,
                0.95,
                seed_bl,
            )
            .ok()
            .map(|ci| (ci.low, ci.high));
            push_cell(
                AurocMethod::BookLevel,
                auroc(&book_pos, &book_neg),
                bl_ci,
                book_pos.len(),
                book_neg.len(),
                seed_bl,
            );

            push_cell(
                AurocMethod::PapersMethodBinary,
                papers_method_auroc(&book_pos, &book_neg),
                None,
                book_pos.len(),
                book_neg.len(),
                0,
            );

            let seed_bp = sub_seed(split, AurocMethod::BalancedParagraph);
            push_cell(
                AurocMethod::BalancedParagraph,
                balanced_auroc(
                    &para_pos,
                    &para_neg,
                    BalanceBase::Plain,
                    self.config.balanced_subsets,
                    seed_bp,
                ),
                None,
                para_pos.len(),
                para_neg.len(),
                seed_bp,
            );

            let seed_bb = sub_seed(split, AurocMethod::BalancedBook);
            push_cell(
                AurocMethod::BalancedBook,
                balanced_auroc(
                    &book_pos,
                    &book_neg,
                    BalanceBase::Plain,
                    self.config.balanced_subsets,
                    seed_bb,
                ),
                None,
                book_pos.len(),
                book_neg.len(),
                seed_bb,
            );

            let seed_bpm = sub_seed(split, AurocMethod::BalancedPapersMethod);
            push_cell(
                AurocMethod::BalancedPapersMethod,
                balanced_auroc(
                    &book_pos,
                    &book_neg,
                    BalanceBase::PapersMethod,
                    self.config.balanced_subsets,
                    seed_bpm,
                ),
                None,
                book_pos.len(),
                book_neg.len(),
                seed_bpm,
            );
        }

        // pooled guess-rate pairs per split
        let mut pooled = Vec::new();
        for split in AccessSplit::ALL_SPLITS {
            let mut sums = BTreeMap::from([
                (corpus::MembershipLabel::PotentialMember, (0u64, 0u64)),
                (corpus::MembershipLabel::NonMember, (0u64, 0u64)),
            ]);
            for record in selected {
                if !split.matches(record.access_label) {
                    continue;
                }
                if let Some((correct, total)) = sums.get_mut(&record.membership_label) {
                    *correct += u64::from(record.n_correct);
                    *total += u64::from(record.n_quizzes);
                }
            }
            let rate = |label: corpus::MembershipLabel| {
                let (correct, total) = sums[&label];
                (total > 0).then(|| correct as f64 / total as f64)
            };
            pooled.push(PooledCell {
                split,
                in_dataset_rate: rate(corpus::MembershipLabel::PotentialMember),
                out_dataset_rate: rate(corpus::MembershipLabel::NonMember),
                n_quizzes_in: sums[&corpus::MembershipLabel::PotentialMember].1,
                n_quizzes_out: sums[&corpus::MembershipLabel::NonMember].1,
            });
        }

        // sample accounting per data split
        let mean_words = |records: &[&&ScoreRecord]| -> f64 {
            if records.is_empty() {
                return 0.0;
            }
            let total: usize = records
                .iter()
                .map(|r| word_counts.get(r.paragraph_id.as_str()).copied().unwrap_or(0))
                .sum();
            total as f64 / records.len() as f64
        };
        let by_access = |label: AccessLabel| -> Vec<&&ScoreRecord> {
            selected
                .iter()
                .filter(|r| r.access_label == label)
                .collect()
        };
        let by_membership = |label: corpus::MembershipLabel| -> Vec<&&ScoreRecord> {
            selected
                .iter()
                .filter(|r| r.membership_label == label)
                .collect()
        };
        let public = by_access(AccessLabel::Public);
        let non_public = by_access(AccessLabel::NonPublic);
        let members = by_membership(corpus::MembershipLabel::PotentialMember);
        let non_members = by_membership(corpus::MembershipLabel::NonMember);
        let samples = vec![
            SampleCell::new("public", public.len(), mean_words(&public)),
            SampleCell::new("non_public", non_public.len(), mean_words(&non_public)),
            SampleCell::new(
                "potentially_in_dataset",
                members.len(),
                mean_words(&members),
            ),
            SampleCell::new(
                "out_of_dataset",
                non_members.len(),
                mean_words(&non_members),
            ),
        ];

        let n_books_scored = selected
            .iter()
            .map(|r| r.doc_id.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len();

        Ok(ModelAnalysis {
            model_name: model.name.clone(),
            cutoff_year: spec.cutoff_year,
            n_books_scored,
            auroc: auroc_cells,
            pooled,
            samples,
        })
    }

    fn stage_report(&self) -> Result<StageRecord, PipelineError> {
        const STAGE: &str = "report";
        let analysis_path = self.paths.analysis();
        self.run_cached_stage(
            Stage::Report,
            &[analysis_path.clone()],
            serde_json::Value::Null,
            || {
                let analysis = read_analysis(&analysis_path).map_err(stage_err(STAGE))?;
                let files =
                    emit_report(&analysis, &self.paths.report_dir()).map_err(stage_err(STAGE))?;
                Ok((files, true))
            },
        )
    }
}

/// Incremental JSONL appender for the paraphrase cache.
struct CacheAppender {
    writer: std::io::BufWriter<std::fs::File>,
}

impl CacheAppender {
    fn open(path: &Path) -> Result<Self, std::io::Error> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        Ok(CacheAppender {
            writer: std::io::BufWriter::new(file),
        })
    }

    fn append<T: Serialize>(&mut self, record: &T) -> Result<(), std::io::Error> {
        use std::io::Write;
        let line = serde_json::to_string(record).expect("record serializes");
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }
}

/// Convenience wrapper: build a pipeline and run the given stages.
pub fn run(config: RunConfig, stages: &[Stage]) -> Result<RunManifest, PipelineError> {
    Pipeline::new(config)?.run(stages)
}

/// Materializes the synthetic corpus named by `config.synthetic` into the
/// output directory: manifest, chapter files, document metadata, and the
/// paragraph store. The ingest stage is marked complete so a subsequent
/// `run --all` picks up the planted paragraphs instead of re-chunking.
pub fn simulate(config: &RunConfig) -> Result<(), PipelineError> {
    const STAGE: &str = "simulate";
    let synth = config.synthetic.clone().ok_or_else(|| {
        PipelineError::Config("simulate requires a `synthetic` section in the run config".into())
    })?;
    let paths = RunPaths::new(&config.out_dir);
    let corpus = synth_corpus(&synth).map_err(stage_err(STAGE))?;

    let mut entries: Vec<ManifestEntry> = Vec::with_capacity(corpus.documents.len());
    for doc in &corpus.documents {
        let mut chapter_paths = Vec::with_capacity(doc.chapters.len());
        for chapter in &doc.chapters {
            let path = paths.synthetic_chapter(&doc.doc_id, chapter.index);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(stage_err(STAGE))?;
            }
            std::fs::write(&path, &chapter.text).map_err(stage_err(STAGE))?;
            chapter_paths.push(PathBuf::from(format!(
                "chapters/{}/ch{:02}.txt",
                doc.doc_id, chapter.index
            )));
        }
        entries.push(ManifestEntry {
            id: doc.doc_id.clone(),
            title: doc.title.clone(),
            author: doc.author.clone(),
            date: doc.publication_date.to_string(),
            chapters: chapter_paths,
            exclude_from_scoring: doc.exclude_from_scoring,
        });
    }
    corpus::write_manifest(&paths.synthetic_manifest(), &entries).map_err(stage_err(STAGE))?;

    let metas: Vec<DocumentMeta> = corpus.documents.iter().map(|d| d.meta()).collect();
    corpus::write_document_meta(&paths.documents(), &metas).map_err(stage_err(STAGE))?;
    let records: Vec<ParagraphRecord> = corpus
        .paragraphs
        .iter()
        .map(ParagraphRecord::from_paragraph)
        .collect();
    corpus::write_paragraph_store(&paths.paragraphs(), &records).map_err(stage_err(STAGE))?;

    // record the ingest state so a following run treats it as fresh
    let mut input_paths = vec![paths.synthetic_manifest()];
    for doc in &corpus.documents {
        for chapter in &doc.chapters {
            input_paths.push(paths.synthetic_chapter(&doc.doc_id, chapter.index));
        }
    }
    let inputs = hash_paths(STAGE, &input_paths)?;
    let outputs = hash_paths(STAGE, &[paths.documents(), paths.paragraphs()])?;
    let record = StageRecord {
        completed_at: Utc::now(),
        skipped: false,
        inputs,
        outputs,
    };
    save_stage_state(&paths.stage_state(Stage::Ingest), &record).map_err(stage_err(STAGE))?;
    log::info!(
        "simulated corpus: {} documents, {} paragraphs",
        corpus.documents.len(),
        corpus.paragraphs.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_synth(seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_books_member: 2,
            n_books_nonmember: 2,
            paragraphs_per_book: 8,
            p_member: 0.8,
            p_nonmember: 0.5,
            p_public_boost: 0.0,
            quizzes_per_paragraph: 24,
            seed,
        }
    }

    #[test]
    fn stage_parse_round_trips() {
        for stage in Stage::ALL {
            assert_eq!(Stage::parse(stage.name()), Some(stage));
        }
        assert_eq!(Stage::parse("bogus"), None);
    }

    #[test]
    fn sanitize_makes_filesystem_safe_names() {
        assert_eq!(sanitize("gpt-4o-2024-08-06"), "gpt-4o-2024-08-06");
        assert_eq!(sanitize("Weird/Name v2"), "weird-name-v2");
    }

    #[test]
    fn synthetic_config_validates() {
        let config = RunConfig::synthetic(Path::new("/tmp/x"), small_synth(1));
        config.validate().unwrap();
        assert_eq!(config.models.len(), 1);
        assert!(config.providers.contains_key("mock-target"));
    }

    #[test]
    fn config_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::synthetic(dir.path(), small_synth(1));
        let path = dir.path().join("config.json");
        config.save(&path).unwrap();
        let loaded = RunConfig::load(&path).unwrap();
        assert_eq!(loaded, config);
    }

    #[test]
    fn validate_rejects_unknown_provider_reference() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::synthetic(dir.path(), small_synth(1));
        config.models[0].provider = "nope".into();
        assert!(matches!(config.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn missing_manifest_is_stage_input_missing() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::synthetic(dir.path(), small_synth(1));
        let err = run(config, &[Stage::Ingest]).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::StageInputMissing { stage: "ingest", .. }
        ));
    }

    #[test]
    fn analyze_without_scores_is_stage_input_missing() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::synthetic(dir.path(), small_synth(1));
        simulate(&config).unwrap();
        let err = run(config, &[Stage::Analyze]).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::StageInputMissing { stage: "analyze", .. }
        ));
    }
}
