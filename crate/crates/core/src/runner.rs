//! Run orchestration: configuration, cohort execution with checkpoints,
//! analysis and report rendering.
//!
//! A run directory looks like
//!
//! ```text
//! manifest.json              effective config, its SHA-256, derived seeds, code version
//! participants/{id}.json     checkpoint: profile, records, completion status
//! transcripts/{id}.txt       the final prompt text of the session
//! requests/{id}.jsonl        one request/response pair per line
//! trials.csv                 records of every completed participant
//! draws.csv                  long-format posterior draws (after `analyze`)
//! summary.json               fixed-effect summary (after `analyze`)
//! proportions.csv, report.md, report.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    condition_proportions, describe, model_spec_for, pairwise_levene, participant_means, render_report, AnalysisError,
    Center, Fingerprint, PairwiseLevene, Report,
};
use crate::client::{ClientError, EndpointConfig, MockBias, MockParticipant, RemoteClient, Respondent};
use crate::coding::{apply_exclusions, read_records, write_records, CodingError, TrialRecord};
use crate::inference::{fit_records, FitSummary, InferenceError, ParamKind, PosteriorDraws, Priors, SamplerConfig};
use crate::participants::{build_cohort, CohortConfig, ParticipantError, ParticipantProfile};
use crate::seeding::derive_seed;
use crate::session::{
    run_session, serialize_transcript, RequestLog, SessionError, SessionFailure, SessionOptions, QUESTION_PREFIX,
    SLOT_SEPARATOR, TURN_SEPARATOR,
};
use crate::stimuli::{
    build_schedule, generate_templates, Experiment, ExperimentDesign, ExposureCondition, Lexicon, ListAssignment,
    StimulusError, StimulusItem, VerbClass,
};
use crate::validation::{run_suite, Suite, SuiteReport, ValidationOptions};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("credential check failed: {0}")]
    Credentials(ClientError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Participant(#[from] ParticipantError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl RunError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Credentials(_) | RunError::Parse { .. } => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Optional overrides of the per-experiment design defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignOverrides {
    pub n_initial_exposures: Option<usize>,
    pub n_interleaved_exposures: Option<usize>,
    pub n_critical: Option<usize>,
    pub verb_mix: Option<BTreeMap<VerbClass, f64>>,
}

/// Everything a run needs. Unset optional sections fall back to the
/// per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
    pub mock: bool,
    /// Sessions executed concurrently.
    pub workers: usize,
    pub design: DesignOverrides,
    pub list_assignment: ListAssignment,
    pub cohort: Option<CohortConfig>,
    /// Lexicon file for template generation; the bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
    /// Prompt text settings. Model name, token limit, stop sequences and the
    /// prompt length cap are taken from `endpoint`.
    pub session: SessionOptions,
    pub endpoint: EndpointConfig,
    /// Mock behavior; its seed is replaced by the derived `mock/{experiment}` seed.
    pub mock_bias: MockBias,
    /// Its seed is replaced by the derived `sampler/{experiment}` seed.
    pub sampler: Option<SamplerConfig>,
    pub priors: Priors,
    pub levene_center: Center,
    /// Also write the standard-normal group offsets to draws.csv.
    pub write_offsets: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::E1a,
            seed: 0,
            out: PathBuf::from("runs/default"),
            mock: false,
            workers: 4,
            design: DesignOverrides::default(),
            list_assignment: ListAssignment::default(),
            cohort: None,
            lexicon: None,
            session: SessionOptions::default(),
            endpoint: EndpointConfig::default(),
            mock_bias: MockBias::default(),
            sampler: None,
            priors: Priors::default(),
            levene_center: Center::Median,
            write_offsets: false,
        }
    }
}

impl RunConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        RunConfig { experiment, ..Default::default() }
    }

    /// Parse TOML, or JSON when the text starts with `{`. A run manifest is
    /// accepted too: its `config` field is used.
    pub fn parse(text: &str) -> Result<Self, String> {
        if text.trim_start().starts_with('{') {
            let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            serde_json::from_value(value).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|message| RunError::Parse { path: path.to_path_buf(), message })
    }

    pub fn cohort_config(&self) -> CohortConfig {
        self.cohort.clone().unwrap_or_else(|| CohortConfig::for_experiment(self.experiment))
    }

    /// Sampler settings with the derived seed.
    pub fn sampler_config(&self) -> SamplerConfig {
        let base = self.sampler.clone().unwrap_or_else(|| SamplerConfig::for_experiment(self.experiment));
        SamplerConfig { seed: derive_seed(self.seed, &format!("sampler/{}", self.experiment)), ..base }
    }

    pub fn mock_config(&self) -> MockBias {
        MockBias { seed: derive_seed(self.seed, &format!("mock/{}", self.experiment)), ..self.mock_bias.clone() }
    }

    pub fn session_options(&self) -> SessionOptions {
        SessionOptions {
            model_name: self.endpoint.model.clone(),
            max_tokens: self.endpoint.max_tokens,
            stop_sequences: self.endpoint.stop_sequences.clone(),
            max_prompt_chars: self.endpoint.max_prompt_chars,
            ..self.session.clone()
        }
    }

    pub fn design_for(&self, condition: ExposureCondition) -> ExperimentDesign {
        let d = &self.design;
        let base = ExperimentDesign::new(self.experiment, condition, self.items_seed());
        ExperimentDesign {
            n_initial_exposures: d.n_initial_exposures.unwrap_or(base.n_initial_exposures),
            n_interleaved_exposures: d.n_interleaved_exposures.unwrap_or(base.n_interleaved_exposures),
            n_critical: d.n_critical.unwrap_or(base.n_critical),
            verb_mix: d.verb_mix.clone().unwrap_or(base.verb_mix),
            ..base
        }
    }

    fn items_seed(&self) -> u64 {
        derive_seed(self.seed, &format!("items/{}", self.experiment))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        for condition in self.experiment.conditions() {
            self.design_for(condition).validate()?;
        }
        let cohort = self.cohort_config();
        if cohort.size == 0 {
            return bad("cohort size must be positive".into());
        }
        self.sampler_config().validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.priors.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.mock_bias.validate().map_err(|e| RunError::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON of the settings that affect results.
    pub fn fingerprint_hash(&self) -> String {
        let canonical = RunConfig { out: PathBuf::new(), workers: 1, ..self.clone() };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out.join("manifest.json")
    }

    pub fn trials_path(&self) -> PathBuf {
        self.out.join("trials.csv")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub config_sha256: String,
    pub config: RunConfig,
    pub seeds: BTreeMap<String, u64>,
    pub participants: Vec<ManifestParticipant>,
    pub formatting: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestParticipant {
    pub participant_id: String,
    pub exposure_condition: ExposureCondition,
    pub temperature: f64,
    pub schedule_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub profile: ParticipantProfile,
    pub complete: bool,
    pub failure: Option<SessionFailure>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub executed: usize,
    pub skipped: usize,
    /// (participant, error) for sessions that did not complete.
    pub failed: Vec<(String, String)>,
    pub records: usize,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failed.is_empty())
    }
}

fn schedule_seed(root: u64, participant_id: &str) -> u64 {
    derive_seed(root, &format!("schedule/{participant_id}"))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| RunError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// The cohort and the item pool each participant is scheduled from.
pub fn prepare_cohort(config: &RunConfig) -> Result<Vec<(ParticipantProfile, Vec<StimulusItem>)>, RunError> {
    let lexicon = match &config.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::default(),
    };
    let profiles = build_cohort(config.experiment, &config.cohort_config(), config.seed, |c| config.design_for(c))?;
    let mut shared: BTreeMap<ExposureCondition, Vec<StimulusItem>> = BTreeMap::new();
    for condition in config.experiment.conditions() {
        shared.insert(condition, generate_templates(&config.design_for(condition), &lexicon, config.items_seed())?);
    }
    profiles
        .into_iter()
        .map(|profile| {
            let cond = profile.design.exposure_condition;
            let items = match config.list_assignment {
                ListAssignment::FixedLists => shared[&cond].clone(),
                ListAssignment::PerParticipant => {
                    // Fresh exposure items, shared critical items.
                    let seed = derive_seed(config.seed, &format!("items/{}/{}", config.experiment, profile.participant_id));
                    let own = generate_templates(&profile.design, &lexicon, seed)?;
                    own.into_iter()
                        .filter(|it| !it.ambiguous)
                        .chain(shared[&cond].iter().filter(|it| it.ambiguous).cloned())
                        .collect()
                }
            };
            Ok((profile, items))
        })
        .collect()
}

fn manifest_for(config: &RunConfig, cohort: &[(ParticipantProfile, Vec<StimulusItem>)]) -> Manifest {
    let exp = config.experiment;
    let seeds = BTreeMap::from([
        ("root".to_string(), config.seed),
        (format!("items/{exp}"), config.items_seed()),
        (format!("temperatures/{exp}"), derive_seed(config.seed, &format!("temperatures/{exp}"))),
        (format!("mock/{exp}"), config.mock_config().seed),
        (format!("sampler/{exp}"), config.sampler_config().seed),
    ]);
    let formatting = BTreeMap::from([
        ("turn_separator".to_string(), format!("{TURN_SEPARATOR:?}")),
        ("slot_separator".to_string(), format!("{SLOT_SEPARATOR:?}")),
        ("question_prefix".to_string(), format!("{QUESTION_PREFIX:?}")),
    ]);
    Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config.fingerprint_hash(),
        config: config.clone(),
        seeds,
        participants: cohort
            .iter()
            .map(|(p, _)| ManifestParticipant {
                participant_id: p.participant_id.clone(),
                exposure_condition: p.design.exposure_condition,
                temperature: p.temperature,
                schedule_seed: schedule_seed(config.seed, &p.participant_id),
            })
            .collect(),
        formatting,
    }
}

fn checkpoint_path(out: &Path, participant_id: &str) -> PathBuf {
    out.join("participants").join(format!("{participant_id}.json"))
}

fn load_checkpoint(out: &Path, participant_id: &str) -> Result<Option<Checkpoint>, RunError> {
    let path = checkpoint_path(out, participant_id);
    if path.exists() {
        read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}

fn respondent_for(config: &RunConfig) -> Result<Box<dyn Respondent>, RunError> {
    if config.mock {
        return Ok(Box::new(MockParticipant::new(config.mock_config())?));
    }
    let client = RemoteClient::from_env(config.endpoint.clone()).map_err(RunError::Credentials)?;
    client.check_credentials().map_err(RunError::Credentials)?;
    Ok(Box::new(client))
}

fn run_one(
    config: &RunConfig,
    profile: &ParticipantProfile,
    items: &[StimulusItem],
    respondent: &dyn Respondent,
    options: &SessionOptions,
) -> Result<Checkpoint, RunError> {
    let schedule = build_schedule(&profile.design, items, schedule_seed(config.seed, &profile.participant_id))?;
    let outcome = run_session(profile, &schedule, respondent, options)?;
    let id = &profile.participant_id;
    write_atomic(&config.out.join("transcripts").join(format!("{id}.txt")), serialize_transcript(&outcome.transcript).as_bytes())?;
    let mut log = Vec::new();
    for entry in &outcome.requests {
        serde_json::to_writer(&mut log, entry as &RequestLog).expect("serializable");
        log.push(b'\n');
    }
    write_atomic(&config.out.join("requests").join(format!("{id}.jsonl")), &log)?;
    let checkpoint = Checkpoint {
        profile: profile.clone(),
        complete: outcome.is_complete(),
        failure: outcome.failure,
        records: outcome.records,
    };
    write_atomic(&checkpoint_path(&config.out, id), &to_json(&checkpoint))?;
    Ok(checkpoint)
}

/// Execute every session not already checkpointed as complete, then write
/// `trials.csv` from all complete participants.
///
/// Without `resume`, an existing manifest in the output directory is an
/// error. With it, the manifest must carry the same config hash.
pub fn cmd_run(config: &RunConfig, resume: bool) -> Result<RunSummary, RunError> {
    config.validate()?;
    let cohort = prepare_cohort(config)?;
    let manifest = manifest_for(config, &cohort);
    let manifest_path = config.manifest_path();
    if manifest_path.exists() {
        if !resume {
            return Err(RunError::Config(format!(
                "{} already holds a run; pass --resume to continue it or choose another --out",
                config.out.display()
            )));
        }
        let previous: Manifest = read_json(&manifest_path)?;
        if previous.config_sha256 != manifest.config_sha256 {
            return Err(RunError::Config(format!(
                "config differs from the one recorded in {} (hash {} vs {})",
                manifest_path.display(),
                previous.config_sha256,
                manifest.config_sha256
            )));
        }
    }

    let mut pending = Vec::new();
    let mut skipped = 0;
    for (profile, items) in &cohort {
        match load_checkpoint(&config.out, &profile.participant_id)? {
            Some(c) if c.complete => skipped += 1,
            _ => pending.push((profile, items)),
        }
    }
    info!("{} sessions to run, {skipped} already complete", pending.len());
    let respondent = if pending.is_empty() { None } else { Some(respondent_for(config)?) };
    write_atomic(&manifest_path, &to_json(&manifest))?;

    let options = config.session_options();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let results: Vec<(String, Result<Checkpoint, RunError>)> = match &respondent {
        None => Vec::new(),
        Some(r) => pool.install(|| {
            pending
                .par_iter()
                .map(|(profile, items)| {
                    let res = run_one(config, profile, items, r.as_ref(), &options);
                    match &res {
                        Ok(c) if c.complete => info!("{} complete", profile.participant_id),
                        Ok(c) => warn!("{} stopped: {:?}", profile.participant_id, c.failure),
                        Err(e) => warn!("{} failed: {e}", profile.participant_id),
                    }
                    (profile.participant_id.clone(), res)
                })
                .collect()
        }),
    };

    let mut summary = RunSummary { executed: results.len(), skipped, ..Default::default() };
    for (id, res) in results {
        match res {
            Ok(c) if c.complete => {}
            Ok(c) => summary.failed.push((
                id,
                c.failure.map(|f| format!("slot {}: {}", f.position, f.error)).unwrap_or_default(),
            )),
            Err(e) => summary.failed.push((id, e.to_string())),
        }
    }
    let mut records = Vec::new();
    for (profile, _) in &cohort {
        if let Some(c) = load_checkpoint(&config.out, &profile.participant_id)? {
            if c.complete {
                records.extend(c.records);
            }
        }
    }
    summary.records = records.len();
    write_records(config.trials_path(), &records)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutput {
    pub summary: FitSummary,
    pub report: Report,
}

fn temperatures_from(out: &Path) -> BTreeMap<String, f64> {
    read_json::<Manifest>(&out.join("manifest.json"))
        .map(|m| m.participants.into_iter().map(|p| (p.participant_id, p.temperature)).collect())
        .unwrap_or_default()
}

fn fingerprint_for(config: &RunConfig, fit: bool) -> Fingerprint {
    let settings = BTreeMap::from([
        ("code_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("config_sha256".to_string(), config.fingerprint_hash()),
        ("respondent".to_string(), if config.mock { "mock".into() } else { config.endpoint.model.clone() }),
        ("list_assignment".to_string(), serde_json::to_value(config.list_assignment).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()),
        ("levene_center".to_string(), config.levene_center.to_string()),
    ]);
    Fingerprint {
        root_seed: config.seed,
        sampler: fit.then(|| config.sampler_config()),
        priors: fit.then_some(config.priors),
        temperatures: temperatures_from(&config.out),
        settings,
    }
}

/// Levene comparisons between the exposure conditions' participant means.
fn exposure_levene(records: &[TrialRecord], center: Center) -> Vec<PairwiseLevene> {
    let means = participant_means(records);
    let mut by_condition: BTreeMap<ExposureCondition, Vec<f64>> = BTreeMap::new();
    let mut seen = std::collections::BTreeSet::new();
    for r in records {
        if let Some(m) = means.get(&r.participant_id) {
            if seen.insert(&r.participant_id) {
                by_condition.entry(r.exposure_condition).or_default().push(*m);
            }
        }
    }
    let samples: Vec<(String, Vec<f64>)> = by_condition.into_iter().map(|(c, v)| (c.to_string(), v)).collect();
    pairwise_levene(&samples, center).unwrap_or_default()
}

fn write_report(out: &Path, report: &Report) -> Result<(), RunError> {
    write_atomic(&out.join("report.md"), report.to_markdown().as_bytes())?;
    write_atomic(&out.join("report.json"), report.to_json().as_bytes())
}

/// Long-format draws: one row per (chain, draw, parameter).
pub fn write_draws(path: &Path, draws: &PosteriorDraws, include_offsets: bool) -> Result<(), RunError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let params: Vec<usize> = (0..draws.n_params())
        .filter(|&i| include_offsets || draws.params[i].kind != ParamKind::Offset)
        .collect();
    let mut go = || -> std::io::Result<()> {
        writeln!(w, "chain,draw,parameter,value")?;
        for c in 0..draws.n_chains {
            for d in 0..draws.draws_per_chain {
                for &p in &params {
                    writeln!(w, "{c},{d},{},{:?}", draws.params[p].name, draws.get(c, d, p))?;
                }
            }
        }
        w.flush()
    };
    go().map_err(io_err(path))
}

/// Fit the experiment's model to a records table and write draws, summary,
/// proportions and the report into the output directory.
pub fn cmd_analyze(config: &RunConfig, records_path: Option<&Path>) -> Result<AnalyzeOutput, RunError> {
    config.validate()?;
    let path = records_path.map(Path::to_path_buf).unwrap_or_else(|| config.trials_path());
    let records = apply_exclusions(read_records(&path)?);
    let binding = model_spec_for(config.experiment);
    let sampler = config.sampler_config();
    info!("fitting {}: {} chains x {} iterations", binding.spec.formula(), sampler.chains, sampler.iterations);
    let fit = fit_records(&records, &binding.spec, config.priors, &sampler)?;
    fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    write_draws(&config.out.join("draws.csv"), &fit.draws, config.write_offsets)?;
    write_atomic(&config.out.join("summary.json"), &to_json(&fit.summary))?;
    let report = report_from(config, &records, Some(&fit.summary), None)?;
    Ok(AnalyzeOutput { summary: fit.summary, report })
}

fn report_from(
    config: &RunConfig,
    records: &[TrialRecord],
    fit: Option<&FitSummary>,
    levene: Option<Vec<PairwiseLevene>>,
) -> Result<Report, RunError> {
    let proportions = condition_proportions(records, config.experiment);
    let mut csv = Vec::new();
    proportions.write_csv_to(&mut csv)?;
    write_atomic(&config.out.join("proportions.csv"), &csv)?;
    let levene = levene.unwrap_or_else(|| exposure_levene(records, config.levene_center));
    let report = render_report(
        config.experiment,
        fit,
        &proportions,
        &describe(records),
        &levene,
        &fingerprint_for(config, fit.is_some()),
    );
    write_report(&config.out, &report)?;
    Ok(report)
}

/// Re-render the report from the records table and, when present, the
/// stored fit summary. With `compare`, the Levene section compares
/// per-participant means of this run against each listed run directory.
pub fn cmd_report(config: &RunConfig, compare: &[PathBuf]) -> Result<Report, RunError> {
    let records = apply_exclusions(read_records(config.trials_path())?);
    let summary_path = config.out.join("summary.json");
    let fit: Option<FitSummary> = if summary_path.exists() { Some(read_json(&summary_path)?) } else { None };
    let levene = if compare.is_empty() {
        None
    } else {
        let label = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string());
        let mut samples = vec![(label(&config.out), participant_means(&records).into_values().collect())];
        for dir in compare {
            let other = apply_exclusions(read_records(dir.join("trials.csv"))?);
            samples.push((label(dir), participant_means(&other).into_values().collect()));
        }
        Some(pairwise_levene(&samples, config.levene_center)?)
    };
    report_from(config, &records, fit.as_ref(), levene)
}

/// Run the selected oracle suites (all when `selection` is empty).
pub fn cmd_validate(selection: &[Suite], options: &ValidationOptions) -> Vec<SuiteReport> {
    let suites: Vec<Suite> = if selection.is_empty() { Suite::ALL.to_vec() } else { selection.to_vec() };
    suites
        .into_iter()
        .map(|s| {
            info!("running {s} suite");
            run_suite(s, options)
        })
        .collect()
}
