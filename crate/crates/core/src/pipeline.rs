//! End-to-end orchestration of the dialogue pipeline.
//!
//! [`run_pipeline`] drives the four stages in order: vote completion,
//! bridging selection, distillation (with an approval checkpoint), and the
//! final tally. Every stage writes its artifact into the output directory
//! before the next stage starts, so a failed run leaves everything computed
//! so far on disk and any single stage can be rerun from the persisted
//! artifacts of the previous one.
//!
//! All randomness flows from the single [`PipelineConfig::seed`]: each
//! stage's config gets its own seed derived by a fixed label, so stages stay
//! decoupled and the whole run is a pure function of (bundle, config, seed)
//! when the stub backend is used.
//!
//! The run ends in a [`ReportBundle`] persisted as canonical JSON plus a
//! Markdown rendering; [`render_report`] also offers a CSV view of the tally
//! table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bridging::{
    fit_latent_factor_model, select_bridging, BridgingConfig, BridgingError, BridgingSet,
    VoteObservations,
};
use crate::canonical::{to_canonical_json, write_canonical_json};
use crate::completion::{complete_votes, CompletionConfig, CompletionError};
use crate::distill::{
    approve, articulate, extract_ideas, CollectiveStatement, Decision, DecisionRecord,
    DecodingParams, DistillError, GenerationBackend, HttpBackend, HttpBackendConfig, IdeaSet,
    PromptTemplate, StubBackend, StubMode, Transcript, ARTICULATE_TEMPLATE_EN,
    EXTRACT_IDEAS_TEMPLATE_EN,
};
use crate::model::{
    load_bundle, BundleError, CompleteVoteMatrix, DialogueBundle, FinalVoteRecord, GroupId,
    StatementId,
};
use crate::seeds::stage_seed;
use crate::tally::{tally, TallyError, TallyResult};

/// Label deriving the completion stage's seed from the pipeline seed.
pub const COMPLETION_STAGE: &str = "stage.completion";
/// Label deriving the bridging stage's seed from the pipeline seed.
pub const BRIDGING_STAGE: &str = "stage.bridging";

/// Environment variable supplying the HTTP backend's API key, so the secret
/// never needs to appear in a config file.
pub const API_KEY_ENV: &str = "BRIDGEKIT_API_KEY";

pub const COMPLETE_VOTES_FILE: &str = "complete_votes.json";
pub const BRIDGING_FILE: &str = "bridging.json";
pub const IDEAS_FILE: &str = "ideas.json";
pub const DRAFTS_FILE: &str = "collective_drafts.json";
pub const APPROVED_FILE: &str = "collective_statements.json";
pub const APPROVAL_LOG_FILE: &str = "approval_log.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const TALLY_FILE: &str = "tally.json";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_MD_FILE: &str = "report.md";

/// Why a pipeline run failed, tagged by stage.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("bundle stage: {0}")]
    Bundle(#[from] BundleError),
    #[error("completion stage: {0}")]
    Completion(#[from] CompletionError),
    #[error("bridging stage: {0}")]
    Bridging(#[from] BridgingError),
    #[error("distillation stage: {0}")]
    Distill(#[from] DistillError),
    #[error("tally stage: {0}")]
    Tally(#[from] TallyError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path} is malformed: {message}")]
    MalformedArtifact { path: PathBuf, message: String },
    #[error("unknown report format {0:?}; expected json, csv, or markdown")]
    UnknownFormat(String),
    #[error("report has no tally yet; csv rendering needs a completed run")]
    MissingTally,
}

/// Which text-generation backend distillation talks to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendChoice {
    /// The deterministic offline stub.
    Stub {
        #[serde(default)]
        mode: StubMode,
    },
    /// A chat-completion-style HTTP service.
    Http {
        #[serde(flatten)]
        config: HttpBackendConfig,
    },
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Stub {
            mode: StubMode::Exact,
        }
    }
}

impl BackendChoice {
    /// Instantiates the backend, pulling a missing HTTP API key from the
    /// environment.
    pub fn build(&self) -> Result<Box<dyn GenerationBackend>, DistillError> {
        match self {
            BackendChoice::Stub { mode } => Ok(Box::new(StubBackend { mode: *mode })),
            BackendChoice::Http { config } => {
                let mut config = config.clone();
                if config.api_key.is_none() {
                    config.api_key = std::env::var(API_KEY_ENV).ok();
                }
                Ok(Box::new(HttpBackend::new(config)?))
            }
        }
    }
}

/// Distillation settings: backend, prompt templates, and draft language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    pub backend: BackendChoice,
    /// Directory of prompt template files named `<step>.<language>.txt`.
    /// Falls back to the built-in English templates.
    pub prompts_dir: Option<PathBuf>,
    /// Language tag stamped on drafted collective statements.
    pub language: String,
    /// Style exemplars shown to the articulation step.
    pub exemplars: Vec<String>,
    pub decoding: DecodingParams,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            backend: BackendChoice::default(),
            prompts_dir: None,
            language: "en".to_owned(),
            exemplars: Vec::new(),
            decoding: DecodingParams::default(),
        }
    }
}

/// Everything a full pipeline run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Directory holding the dialogue bundle.
    pub bundle_dir: PathBuf,
    /// Directory stage artifacts and reports are written into.
    pub out_dir: PathBuf,
    /// Top-level seed. Per-stage seeds are derived from it by stage label;
    /// the seed fields inside the stage configs are overridden.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub completion: CompletionConfig,
    #[serde(default)]
    pub bridging: BridgingConfig,
    #[serde(default)]
    pub distill: DistillConfig,
    /// Approve every draft unchanged instead of pausing for review.
    #[serde(default)]
    pub auto_approve: bool,
    /// Review decisions to apply when not auto-approving.
    #[serde(default)]
    pub decisions_path: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        read_json_artifact(path)
    }

    /// The completion config with its stage seed applied.
    pub fn completion_config(&self) -> CompletionConfig {
        effective_completion(&self.completion, self.seed)
    }

    /// The bridging config with its stage seed applied.
    pub fn bridging_config(&self) -> BridgingConfig {
        effective_bridging(&self.bridging, self.seed)
    }
}

fn effective_completion(cfg: &CompletionConfig, seed: u64) -> CompletionConfig {
    let mut cfg = cfg.clone();
    cfg.seed = stage_seed(seed, COMPLETION_STAGE);
    cfg
}

fn effective_bridging(cfg: &BridgingConfig, seed: u64) -> BridgingConfig {
    let mut cfg = cfg.clone();
    cfg.seed = stage_seed(seed, BRIDGING_STAGE);
    cfg
}

/// Where a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineStatus {
    /// Drafts are written; the run needs review decisions to continue.
    AwaitingApproval,
    /// Statements are approved; the bundle has no final votes to tally.
    AwaitingFinalVote,
    Complete,
}

impl fmt::Display for PipelineStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineStatus::AwaitingApproval => f.write_str("awaiting approval"),
            PipelineStatus::AwaitingFinalVote => f.write_str("awaiting final vote"),
            PipelineStatus::Complete => f.write_str("complete"),
        }
    }
}

/// The settings a run actually used, echoed into the report. Paths that
/// only locate inputs and outputs are left out so reports from identical
/// data and seeds are byte-identical regardless of where they ran.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub completion: CompletionConfig,
    pub bridging: BridgingConfig,
    pub distill: DistillConfig,
    pub auto_approve: bool,
}

/// Everything a finished (or paused) run reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub version: String,
    pub status: PipelineStatus,
    pub config: ConfigEcho,
    pub group_sizes: BTreeMap<GroupId, usize>,
    pub bridging: BridgingSet,
    pub ideas: IdeaSet,
    /// Drafts while awaiting approval, the approved set afterwards.
    pub collective: Vec<CollectiveStatement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tally: Option<TallyResult>,
}

/// Runs vote completion with the stage-seeded config.
pub fn stage_complete(
    bundle: &DialogueBundle,
    cfg: &CompletionConfig,
) -> Result<CompleteVoteMatrix, PipelineError> {
    Ok(complete_votes(&bundle.votes, bundle, cfg)?)
}

/// Fits the factor model and selects the bridging set.
pub fn stage_bridge(
    bundle: &DialogueBundle,
    complete: &CompleteVoteMatrix,
    cfg: &BridgingConfig,
) -> Result<BridgingSet, PipelineError> {
    let observations = if cfg.stated_only {
        VoteObservations::from_stated(complete)
    } else {
        VoteObservations::from_complete(complete)
    };
    let params = fit_latent_factor_model(&observations, cfg)?;
    Ok(select_bridging(
        complete,
        bundle.group_partition(),
        &params,
        cfg,
    )?)
}

/// Extracts ideas and drafts collective statements for the bridging set.
///
/// The caller owns the transcript so it can be persisted even when a backend
/// call or its output fails.
pub fn stage_distill(
    bundle: &DialogueBundle,
    selected: &[StatementId],
    cfg: &DistillConfig,
    transcript: &mut Transcript,
) -> Result<(IdeaSet, Vec<CollectiveStatement>), PipelineError> {
    let backend = cfg.backend.build()?;
    let extract_template = load_template(
        cfg.prompts_dir.as_deref(),
        "extract_ideas",
        &cfg.language,
        EXTRACT_IDEAS_TEMPLATE_EN,
    )?;
    let articulate_template = load_template(
        cfg.prompts_dir.as_deref(),
        "articulate",
        &cfg.language,
        ARTICULATE_TEMPLATE_EN,
    )?;
    let ideas = extract_ideas(
        selected,
        &bundle.statements,
        backend.as_ref(),
        &extract_template,
        &cfg.decoding,
        transcript,
    )?;
    let drafts = articulate(
        &ideas,
        &bundle.statements,
        &cfg.exemplars,
        &cfg.language,
        backend.as_ref(),
        &articulate_template,
        &cfg.decoding,
        transcript,
    )?;
    Ok((ideas, drafts))
}

/// Tallies the final votes over the approved statements, dropping ballots'
/// references to statements that did not survive review.
pub fn stage_tally(
    bundle: &DialogueBundle,
    final_votes: &FinalVoteRecord,
    approved: &[StatementId],
) -> Result<TallyResult, PipelineError> {
    let keep: BTreeSet<&StatementId> = approved.iter().collect();
    let projected = project_final_votes(final_votes, &keep);
    Ok(tally(&projected, approved, bundle.group_partition())?)
}

/// Restricts final votes to the given statements: foreign Likert ballots
/// are dropped and rankings keep only surviving statements, in order.
fn project_final_votes(
    final_votes: &FinalVoteRecord,
    keep: &BTreeSet<&StatementId>,
) -> FinalVoteRecord {
    let likert = final_votes
        .likert
        .iter()
        .filter(|b| keep.contains(&b.statement_id))
        .cloned()
        .collect();
    let rankings = final_votes
        .rankings
        .iter()
        .map(|b| {
            let mut ballot = b.clone();
            ballot.ranking.retain(|s| keep.contains(s));
            ballot
        })
        .filter(|b| !b.ranking.is_empty())
        .collect();
    FinalVoteRecord { likert, rankings }
}

/// Loads `<step>.<language>.txt` from the prompt directory, falling back to
/// the English file there, then to the built-in English template.
fn load_template(
    dir: Option<&Path>,
    step: &str,
    language: &str,
    builtin: &str,
) -> Result<PromptTemplate, PipelineError> {
    if let Some(dir) = dir {
        for candidate in [
            dir.join(format!("{step}.{language}.txt")),
            dir.join(format!("{step}.en.txt")),
        ] {
            if candidate.exists() {
                return PromptTemplate::from_file(&candidate).map_err(|e| PipelineError::Io {
                    path: candidate,
                    source: e,
                });
            }
        }
    }
    Ok(PromptTemplate::new(builtin))
}

/// The pure distillation front of the pipeline: completion, bridging, idea
/// extraction, and drafting, with per-stage seeds derived from `seed`.
/// Writes nothing to disk.
pub struct DistilledDialogue {
    pub complete: CompleteVoteMatrix,
    pub bridging: BridgingSet,
    pub ideas: IdeaSet,
    pub drafts: Vec<CollectiveStatement>,
    pub transcript: Transcript,
}

pub fn distill_dialogue(
    bundle: &DialogueBundle,
    seed: u64,
    completion: &CompletionConfig,
    bridging_cfg: &BridgingConfig,
    distill: &DistillConfig,
) -> Result<DistilledDialogue, PipelineError> {
    let complete = stage_complete(bundle, &effective_completion(completion, seed))?;
    let bridging = stage_bridge(bundle, &complete, &effective_bridging(bridging_cfg, seed))?;
    let mut transcript = Transcript::default();
    let (ideas, drafts) = stage_distill(bundle, &bridging.selected, distill, &mut transcript)?;
    Ok(DistilledDialogue {
        complete,
        bridging,
        ideas,
        drafts,
        transcript,
    })
}

/// Loads the bundle and runs every stage, persisting artifacts as it goes.
pub fn run_pipeline(config: &PipelineConfig) -> Result<ReportBundle, PipelineError> {
    let bundle = load_bundle(&config.bundle_dir)?;
    run_pipeline_on(config, &bundle)
}

/// [`run_pipeline`] for an already-loaded bundle.
pub fn run_pipeline_on(
    config: &PipelineConfig,
    bundle: &DialogueBundle,
) -> Result<ReportBundle, PipelineError> {
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;

    let complete = stage_complete(bundle, &config.completion_config())?;
    write_artifact(out, COMPLETE_VOTES_FILE, &complete)?;

    let bridging = stage_bridge(bundle, &complete, &config.bridging_config())?;
    write_artifact(out, BRIDGING_FILE, &bridging)?;

    let mut transcript = Transcript::default();
    let distilled = stage_distill(bundle, &bridging.selected, &config.distill, &mut transcript);
    let transcript_path = out.join(TRANSCRIPT_FILE);
    fs::write(&transcript_path, transcript.to_jsonl())
        .map_err(|e| io_err(&transcript_path, e))?;
    let (ideas, drafts) = distilled?;
    write_artifact(out, IDEAS_FILE, &ideas)?;
    write_artifact(out, DRAFTS_FILE, &drafts)?;

    let report = |status, collective, tally| ReportBundle {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        status,
        config: ConfigEcho {
            seed: config.seed,
            completion: config.completion_config(),
            bridging: config.bridging_config(),
            distill: config.distill.clone(),
            auto_approve: config.auto_approve,
        },
        group_sizes: bundle.group_partition().sizes().into_iter().collect(),
        bridging: bridging.clone(),
        ideas: ideas.clone(),
        collective,
        tally,
    };

    let decisions: Option<BTreeMap<StatementId, Decision>> = if config.auto_approve {
        Some(
            drafts
                .iter()
                .map(|d| (d.id.clone(), Decision::Approve))
                .collect(),
        )
    } else if let Some(path) = &config.decisions_path {
        Some(read_json_artifact(path)?)
    } else {
        None
    };
    let Some(decisions) = decisions else {
        let paused = report(PipelineStatus::AwaitingApproval, drafts, None);
        write_reports(out, &paused)?;
        return Ok(paused);
    };

    let outcome = approve(&drafts, &decisions).map_err(PipelineError::Distill)?;
    write_artifact(out, APPROVAL_LOG_FILE, &outcome.log)?;
    write_artifact(out, APPROVED_FILE, &outcome.approved)?;

    let finished = match &bundle.final_votes {
        Some(final_votes) if !outcome.approved.is_empty() => {
            let ids: Vec<StatementId> = outcome.approved.iter().map(|s| s.id.clone()).collect();
            let result = stage_tally(bundle, final_votes, &ids)?;
            write_artifact(out, TALLY_FILE, &result)?;
            report(PipelineStatus::Complete, outcome.approved, Some(result))
        }
        Some(_) => report(PipelineStatus::Complete, outcome.approved, None),
        None => report(PipelineStatus::AwaitingFinalVote, outcome.approved, None),
    };
    write_reports(out, &finished)?;
    Ok(finished)
}

fn io_err(path: &Path, source: io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_artifact<T: Serialize>(out: &Path, file: &str, value: &T) -> Result<(), PipelineError> {
    let path = out.join(file);
    write_canonical_json(&path, value).map_err(|e| io_err(&path, e))
}

fn write_reports(out: &Path, report: &ReportBundle) -> Result<(), PipelineError> {
    let json_path = out.join(REPORT_JSON_FILE);
    let json = to_canonical_json(report).expect("report serializes");
    fs::write(&json_path, json).map_err(|e| io_err(&json_path, e))?;
    let md_path = out.join(REPORT_MD_FILE);
    fs::write(&md_path, markdown_report(report)).map_err(|e| io_err(&md_path, e))
}

/// Reads a persisted JSON artifact or config file.
pub fn read_json_artifact<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::MalformedArtifact {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Output format for [`render_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(PipelineError::UnknownFormat(other.to_owned())),
        }
    }
}

/// Renders the report deterministically in the requested format.
pub fn render_report(report: &ReportBundle, format: ReportFormat) -> Result<String, PipelineError> {
    match format {
        ReportFormat::Json => Ok(to_canonical_json(report).expect("report serializes")),
        ReportFormat::Markdown => Ok(markdown_report(report)),
        ReportFormat::Csv => csv_report(report),
    }
}

/// The tally table as CSV, one row per collective statement.
fn csv_report(report: &ReportBundle) -> Result<String, PipelineError> {
    let tally = report.tally.as_ref().ok_or(PipelineError::MissingTally)?;
    let texts: BTreeMap<&StatementId, &str> = report
        .collective
        .iter()
        .map(|s| (&s.id, s.text.as_str()))
        .collect();
    let groups: Vec<&GroupId> = report.group_sizes.keys().collect();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["statement_id".to_owned(), "text".to_owned()];
    header.extend(groups.iter().map(|g| format!("agreement:{g}")));
    header.extend([
        "final_max_min".to_owned(),
        "dowdall_equal_power".to_owned(),
        "irv_rank".to_owned(),
    ]);
    writer.write_record(&header).expect("csv writes to memory");
    for row in &tally.statements {
        let mut record = vec![
            row.statement_id.to_string(),
            texts.get(&row.statement_id).copied().unwrap_or("").to_owned(),
        ];
        for group in &groups {
            let cell = row
                .group_agreement
                .get(*group)
                .map(|v| format!("{v:.6}"))
                .unwrap_or_default();
            record.push(cell);
        }
        record.push(format!("{:.6}", row.final_max_min));
        record.push(format!("{:.6}", row.dowdall_equal_power));
        record.push(row.irv_rank.to_string());
        writer.write_record(&record).expect("csv writes to memory");
    }
    let bytes = writer.into_inner().expect("csv writes to memory");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn md_escape(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

/// The report as a human-readable Markdown document.
fn markdown_report(report: &ReportBundle) -> String {
    let mut md = String::new();
    let w = &mut md;
    writeln!(w, "# Dialogue report").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "- version: {}", report.version).unwrap();
    writeln!(w, "- status: {}", report.status).unwrap();
    writeln!(w, "- seed: {}", report.config.seed).unwrap();
    let sizes: Vec<String> = report
        .group_sizes
        .iter()
        .map(|(g, n)| format!("{g}: {n}"))
        .collect();
    writeln!(w, "- group sizes: {}", sizes.join(", ")).unwrap();
    writeln!(w).unwrap();

    writeln!(w, "## Bridging selection").unwrap();
    writeln!(w).unwrap();
    writeln!(
        w,
        "{} of {} statements selected.",
        report.bridging.selected.len(),
        report.bridging.diagnostics.len()
    )
    .unwrap();
    writeln!(w).unwrap();
    writeln!(w, "| Statement | Min agreement | Distance | Selected by |").unwrap();
    writeln!(w, "| --- | --- | --- | --- |").unwrap();
    for diag in &report.bridging.diagnostics {
        if let Some(reason) = &diag.reason {
            writeln!(
                w,
                "| {} | {:.3} | {:.3} | {} |",
                diag.statement_id, diag.a_min, diag.distance, reason
            )
            .unwrap();
        }
    }
    writeln!(w).unwrap();

    writeln!(w, "## Ideas").unwrap();
    writeln!(w).unwrap();
    for idea in &report.ideas.ideas {
        let sources: Vec<String> = idea.supporting.iter().map(|s| s.to_string()).collect();
        writeln!(
            w,
            "- {}: {} (from {})",
            idea.id,
            md_escape(&idea.summary),
            sources.join(", ")
        )
        .unwrap();
    }
    writeln!(w).unwrap();

    writeln!(w, "## Collective statements").unwrap();
    writeln!(w).unwrap();
    for statement in &report.collective {
        let sources: Vec<String> = statement
            .source_statements
            .iter()
            .map(|s| s.to_string())
            .collect();
        writeln!(
            w,
            "- {} ({:?}, idea {}, from {}): {}",
            statement.id,
            statement.review_status,
            statement.source_idea,
            sources.join(", "),
            md_escape(&statement.text)
        )
        .unwrap();
    }
    writeln!(w).unwrap();

    if let Some(tally) = &report.tally {
        let texts: BTreeMap<&StatementId, &str> = report
            .collective
            .iter()
            .map(|s| (&s.id, s.text.as_str()))
            .collect();
        writeln!(w, "## Final tally").unwrap();
        writeln!(w).unwrap();
        let groups: Vec<&GroupId> = report.group_sizes.keys().collect();
        let mut header = String::from("| Rank | Statement | Text |");
        let mut rule = String::from("| --- | --- | --- |");
        for group in &groups {
            write!(header, " {group} |").unwrap();
            rule.push_str(" --- |");
        }
        header.push_str(" Min | Dowdall (EP) |");
        rule.push_str(" --- | --- |");
        writeln!(w, "{header}").unwrap();
        writeln!(w, "{rule}").unwrap();
        let mut rows = tally.statements.clone();
        rows.sort_by_key(|r| r.irv_rank);
        for row in rows {
            let text = texts.get(&row.statement_id).copied().unwrap_or("");
            write!(
                w,
                "| {} | {} | {} |",
                row.irv_rank,
                row.statement_id,
                md_escape(text)
            )
            .unwrap();
            for group in &groups {
                match row.group_agreement.get(*group) {
                    Some(v) => write!(w, " {:.1}% |", v * 100.0).unwrap(),
                    None => write!(w, " |").unwrap(),
                }
            }
            writeln!(
                w,
                " {:.1}% | {:.4} |",
                row.final_max_min * 100.0,
                row.dowdall_equal_power
            )
            .unwrap();
        }
        writeln!(w).unwrap();
        let order: Vec<String> = tally
            .elimination_order
            .iter()
            .map(|s| s.to_string())
            .collect();
        writeln!(w, "Elimination order: {}.", order.join(", ")).unwrap();
        let counts: Vec<String> = tally
            .ballot_counts
            .iter()
            .map(|(g, n)| format!("{g}: {n}"))
            .collect();
        writeln!(w, "Rank ballots per group: {}.", counts.join(", ")).unwrap();
    }
    md
}

/// Applies persisted review decisions to persisted drafts, writing the
/// approved set and the decision log. Returns the outcome for the caller to
/// inspect.
pub fn apply_decisions(
    out: &Path,
    decisions_path: &Path,
) -> Result<(Vec<CollectiveStatement>, Vec<DecisionRecord>, bool), PipelineError> {
    let drafts: Vec<CollectiveStatement> = read_json_artifact(&out.join(DRAFTS_FILE))?;
    let decisions: BTreeMap<StatementId, Decision> = read_json_artifact(decisions_path)?;
    let outcome = approve(&drafts, &decisions).map_err(PipelineError::Distill)?;
    write_artifact(out, APPROVAL_LOG_FILE, &outcome.log)?;
    write_artifact(out, APPROVED_FILE, &outcome.approved)?;
    Ok((outcome.approved, outcome.log, outcome.all_rejected))
}
