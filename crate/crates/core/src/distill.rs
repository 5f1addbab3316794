//! Distilling bridging statements into collective statements.
//!
//! Distillation runs in two generation steps, mirroring how a facilitation
//! team works: [`extract_ideas`] groups the bridging statements into
//! distinct ideas, and [`articulate`] drafts one collective statement per
//! idea. Both steps talk to a [`GenerationBackend`] through prompt
//! templates, exchange payloads as fenced JSON blocks, retry once on
//! malformed output, and record every call in a [`Transcript`].
//!
//! Two backends ship: [`HttpBackend`] for chat-completion-style HTTP
//! services and [`StubBackend`], which is fully deterministic and keeps the
//! whole pipeline runnable offline. The stub extracts ideas by text
//! deduplication (exact or normalized-token) and articulates by echoing the
//! longest supporting statement verbatim, so its outputs are auditable and
//! suitable for golden-file tests.
//!
//! Drafts then pass through [`approve`], which applies human review
//! decisions and produces the final approved set with a decision log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{Statement, StatementId};

/// Why a distillation step failed.
#[derive(Debug, thiserror::Error)]
pub enum DistillError {
    #[error("the bridging set is empty; nothing to distill")]
    EmptyBridgingSet,
    #[error("prompt template is missing the required placeholder {{{{{0}}}}}")]
    MissingPlaceholder(String),
    #[error("bridging set references unknown statement {0}")]
    UnknownStatement(StatementId),
    #[error("backend {backend} failed: {message}")]
    Backend { backend: String, message: String },
    #[error("{stage} output could not be used after a retry: {detail}")]
    BadOutput { stage: String, detail: String },
    #[error("no decision provided for draft {0}")]
    MissingDecision(StatementId),
    #[error("decision references unknown draft {0}")]
    UnknownDecision(StatementId),
    #[error("edit for draft {0} has empty text")]
    EmptyEdit(StatementId),
}

/// Decoding parameters passed to a generation backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            temperature: 0.0,
            max_tokens: 2048,
        }
    }
}

/// A text-generation service the distillation steps can call.
pub trait GenerationBackend {
    fn generate(&self, prompt: &str, params: &DecodingParams) -> Result<String, DistillError>;

    /// Short provenance string recorded with every transcript entry.
    fn identity(&self) -> String;
}

/// A prompt template with `{{name}}` placeholders.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Self {
        PromptTemplate { text: text.into() }
    }

    pub fn from_file(path: &Path) -> io::Result<Self> {
        Ok(PromptTemplate::new(fs::read_to_string(path)?))
    }

    /// Substitutes every provided placeholder. Placeholders listed in
    /// `required` must occur in the template text.
    pub fn render(
        &self,
        values: &BTreeMap<&str, String>,
        required: &[&str],
    ) -> Result<String, DistillError> {
        for name in required {
            if !self.text.contains(&format!("{{{{{name}}}}}")) {
                return Err(DistillError::MissingPlaceholder((*name).to_owned()));
            }
        }
        let mut out = self.text.clone();
        for (name, value) in values {
            out = out.replace(&format!("{{{{{name}}}}}"), value);
        }
        Ok(out)
    }
}

/// Default English template for the idea-extraction step.
pub const EXTRACT_IDEAS_TEMPLATE_EN: &str = include_str!("../prompts/extract_ideas.en.txt");
/// Default English template for the articulation step.
pub const ARTICULATE_TEMPLATE_EN: &str = include_str!("../prompts/articulate.en.txt");

/// One backend call: the exact prompt sent and text received.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// Which step made the call: `extract_ideas` or `articulate`.
    pub stage: String,
    /// 1 for the first attempt, 2 for the retry.
    pub attempt: u32,
    pub backend: String,
    pub prompt: String,
    pub response: String,
}

/// Every backend call made during a distillation run, in order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    /// One JSON object per line, keys sorted.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            let value = serde_json::to_value(entry).expect("transcript entries serialize");
            out.push_str(&serde_json::to_string(&value).expect("value serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> serde_json::Result<Self> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<serde_json::Result<Vec<TranscriptEntry>>>()?;
        Ok(Transcript { entries })
    }
}

/// Extracts the last ```json fenced block, falling back to the last plain
/// fenced block, then to the whole text.
fn parse_fenced_json(text: &str) -> Result<serde_json::Value, String> {
    let candidate = last_fenced_block(text, "```json")
        .or_else(|| last_fenced_block(text, "```"))
        .unwrap_or_else(|| text.trim().to_owned());
    serde_json::from_str(&candidate).map_err(|e| format!("invalid JSON: {e}"))
}

/// The content of the last fenced block opened by `opener`.
fn last_fenced_block(text: &str, opener: &str) -> Option<String> {
    let start = text.rfind(opener)?;
    let body_start = start + opener.len();
    let newline = text[body_start..].find('\n')?;
    let body = &text[body_start + newline + 1..];
    let end = body.find("```")?;
    Some(body[..end].trim().to_owned())
}

/// Wraps a JSON value in a fenced block for embedding into prompts.
fn fenced_json(value: &serde_json::Value) -> String {
    format!(
        "```json\n{}\n```",
        serde_json::to_string(value).expect("payload serializes")
    )
}

/// How the stub backend decides two statements express the same idea.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StubMode {
    /// Byte-identical text.
    #[default]
    Exact,
    /// Equal after lowercasing, stripping punctuation, and collapsing
    /// whitespace.
    NormalizedTokens,
}

/// Deterministic offline backend.
///
/// It answers the same fenced-JSON protocol the HTTP backend is prompted to
/// follow: idea extraction groups statements by (possibly normalized) text,
/// and articulation returns the longest supporting statement verbatim,
/// breaking length ties by smaller statement id.
#[derive(Clone, Copy, Debug, Default)]
pub struct StubBackend {
    pub mode: StubMode,
}

/// Lowercases, replaces non-alphanumeric characters with spaces, and
/// collapses runs of whitespace.
pub fn normalize_tokens(text: &str) -> String {
    let lowered: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
struct StubStatement {
    id: String,
    text: String,
}

#[derive(Deserialize)]
struct StubIdea {
    id: String,
    supporting: Vec<StubStatement>,
}

impl StubBackend {
    fn dedup_key(&self, text: &str) -> String {
        match self.mode {
            StubMode::Exact => text.to_owned(),
            StubMode::NormalizedTokens => normalize_tokens(text),
        }
    }

    fn answer_extract(&self, statements: Vec<StubStatement>) -> serde_json::Value {
        let mut order: Vec<String> = Vec::new();
        let mut clusters: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
        for statement in statements {
            let key = self.dedup_key(&statement.text);
            if let Some((_, ids)) = clusters.get_mut(&key) {
                ids.push(statement.id);
            } else {
                order.push(key.clone());
                clusters.insert(key, (statement.text, vec![statement.id]));
            }
        }
        let ideas: Vec<serde_json::Value> = order
            .iter()
            .map(|key| {
                let (summary, ids) = &clusters[key];
                serde_json::json!({"summary": summary, "supporting": ids})
            })
            .collect();
        serde_json::json!({ "ideas": ideas })
    }

    fn answer_articulate(&self, ideas: Vec<StubIdea>) -> serde_json::Value {
        let statements: Vec<serde_json::Value> = ideas
            .into_iter()
            .map(|idea| {
                let best = idea
                    .supporting
                    .iter()
                    .max_by(|a, b| {
                        let la = a.text.chars().count();
                        let lb = b.text.chars().count();
                        la.cmp(&lb).then_with(|| b.id.cmp(&a.id))
                    })
                    .expect("ideas carry at least one supporting statement");
                serde_json::json!({"idea_id": idea.id, "text": best.text})
            })
            .collect();
        serde_json::json!({ "statements": statements })
    }
}

impl GenerationBackend for StubBackend {
    fn generate(&self, prompt: &str, _params: &DecodingParams) -> Result<String, DistillError> {
        let payload = parse_fenced_json(prompt).map_err(|e| DistillError::Backend {
            backend: self.identity(),
            message: format!("prompt carries no JSON payload: {e}"),
        })?;
        let answer = if let Ok(statements) =
            serde_json::from_value::<Vec<StubStatement>>(payload.clone())
        {
            self.answer_extract(statements)
        } else if let Ok(ideas) = serde_json::from_value::<Vec<StubIdea>>(payload) {
            self.answer_articulate(ideas)
        } else {
            return Err(DistillError::Backend {
                backend: self.identity(),
                message: "prompt payload matches neither step's input shape".to_owned(),
            });
        };
        Ok(fenced_json(&answer))
    }

    fn identity(&self) -> String {
        match self.mode {
            StubMode::Exact => "stub:exact".to_owned(),
            StubMode::NormalizedTokens => "stub:normalized-tokens".to_owned(),
        }
    }
}

/// Connection settings for a chat-completion-style HTTP service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpBackendConfig {
    /// Base URL; the backend posts to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Bearer token. Usually injected from the environment, never stored in
    /// reports.
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

/// HTTP backend speaking the common chat-completions wire shape.
pub struct HttpBackend {
    config: HttpBackendConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, DistillError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| DistillError::Backend {
                backend: format!("http:{}", config.model),
                message: e.to_string(),
            })?;
        Ok(HttpBackend { config, client })
    }
}

impl GenerationBackend for HttpBackend {
    fn generate(&self, prompt: &str, params: &DecodingParams) -> Result<String, DistillError> {
        let backend_err = |message: String| DistillError::Backend {
            backend: self.identity(),
            message,
        };
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut request = self.client.post(&url).json(&body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| backend_err(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| backend_err(e.to_string()))?;
        if !status.is_success() {
            let snippet: String = text.chars().take(300).collect();
            return Err(backend_err(format!("HTTP {status}: {snippet}")));
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| backend_err(format!("invalid JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| backend_err("response carries no choices[0].message.content".to_owned()))
    }

    fn identity(&self) -> String {
        format!("http:{}", self.config.model)
    }
}

/// One distinct idea found among the bridging statements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Idea {
    pub id: String,
    pub summary: String,
    /// Bridging statements expressing this idea.
    pub supporting: Vec<StatementId>,
}

/// The distinct ideas extracted from the bridging set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaSet {
    pub ideas: Vec<Idea>,
}

/// Review state of a collective statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Draft,
    Approved,
}

/// A statement articulated from one idea, traceable to its sources.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectiveStatement {
    pub id: StatementId,
    pub text: String,
    /// IETF language tag of `text`.
    pub language: String,
    pub source_idea: String,
    pub source_statements: Vec<StatementId>,
    pub review_status: ReviewStatus,
}

/// Runs a backend call with one retry on malformed output.
///
/// `interpret` validates and converts the parsed JSON; its error message is
/// appended to the retry prompt so a capable backend can correct itself.
fn call_with_retry<T>(
    stage: &str,
    prompt: &str,
    backend: &dyn GenerationBackend,
    params: &DecodingParams,
    transcript: &mut Transcript,
    interpret: impl Fn(serde_json::Value) -> Result<T, String>,
) -> Result<T, DistillError> {
    let mut last_error = String::new();
    for attempt in 1..=2u32 {
        let attempt_prompt = if attempt == 1 {
            prompt.to_owned()
        } else {
            format!(
                "{prompt}\n\nYour previous reply could not be used ({last_error}). \
                 Reply again with exactly one fenced JSON block in the required shape."
            )
        };
        let response = backend.generate(&attempt_prompt, params)?;
        transcript.entries.push(TranscriptEntry {
            stage: stage.to_owned(),
            attempt,
            backend: backend.identity(),
            prompt: attempt_prompt,
            response: response.clone(),
        });
        match parse_fenced_json(&response).and_then(&interpret) {
            Ok(value) => return Ok(value),
            Err(e) => last_error = e,
        }
    }
    Err(DistillError::BadOutput {
        stage: stage.to_owned(),
        detail: last_error,
    })
}

#[derive(Deserialize)]
struct RawIdeas {
    ideas: Vec<RawIdea>,
}

#[derive(Deserialize)]
struct RawIdea {
    summary: String,
    supporting: Vec<String>,
}

/// Groups the bridging statements into distinct ideas via the backend.
///
/// `bridging_ids` are the selected statement ids; `statements` must cover
/// them. Idea ids are assigned in response order as `i1`, `i2`, …
pub fn extract_ideas(
    bridging_ids: &[StatementId],
    statements: &[Statement],
    backend: &dyn GenerationBackend,
    template: &PromptTemplate,
    params: &DecodingParams,
    transcript: &mut Transcript,
) -> Result<IdeaSet, DistillError> {
    if bridging_ids.is_empty() {
        return Err(DistillError::EmptyBridgingSet);
    }
    let by_id: BTreeMap<&StatementId, &Statement> =
        statements.iter().map(|s| (&s.id, s)).collect();
    let mut payload = Vec::with_capacity(bridging_ids.len());
    for id in bridging_ids {
        let statement = by_id
            .get(id)
            .ok_or_else(|| DistillError::UnknownStatement((*id).clone()))?;
        payload.push(serde_json::json!({"id": id, "text": statement.text}));
    }
    let values = BTreeMap::from([(
        "statements_json",
        fenced_json(&serde_json::Value::Array(payload)),
    )]);
    let prompt = template.render(&values, &["statements_json"])?;

    let allowed: BTreeSet<&StatementId> = bridging_ids.iter().collect();
    let ideas = call_with_retry(
        "extract_ideas",
        &prompt,
        backend,
        params,
        transcript,
        |value| {
            let raw: RawIdeas = serde_json::from_value(value)
                .map_err(|e| format!("expected {{\"ideas\": [...]}}: {e}"))?;
            if raw.ideas.is_empty() {
                return Err("no ideas returned".to_owned());
            }
            let mut ideas = Vec::with_capacity(raw.ideas.len());
            for (i, idea) in raw.ideas.into_iter().enumerate() {
                if idea.supporting.is_empty() {
                    return Err(format!("idea {} cites no supporting statements", i + 1));
                }
                let mut supporting = Vec::with_capacity(idea.supporting.len());
                for id in idea.supporting {
                    let id = StatementId::new(id);
                    if !allowed.contains(&id) {
                        return Err(format!("supporting id {id} is not in the bridging set"));
                    }
                    if supporting.contains(&id) {
                        return Err(format!("supporting id {id} cited twice by one idea"));
                    }
                    supporting.push(id);
                }
                ideas.push(Idea {
                    id: format!("i{}", i + 1),
                    summary: idea.summary,
                    supporting,
                });
            }
            Ok(IdeaSet { ideas })
        },
    )?;
    Ok(ideas)
}

#[derive(Deserialize)]
struct RawDrafts {
    statements: Vec<RawDraft>,
}

#[derive(Deserialize)]
struct RawDraft {
    idea_id: String,
    text: String,
}

/// Drafts one collective statement per idea via the backend.
///
/// Draft ids are assigned in idea order as `c1`, `c2`, …; `language` tags
/// the drafts. Exemplars, when given, show the backend the expected style.
#[allow(clippy::too_many_arguments)]
pub fn articulate(
    ideas: &IdeaSet,
    statements: &[Statement],
    exemplars: &[String],
    language: &str,
    backend: &dyn GenerationBackend,
    template: &PromptTemplate,
    params: &DecodingParams,
    transcript: &mut Transcript,
) -> Result<Vec<CollectiveStatement>, DistillError> {
    if ideas.ideas.is_empty() {
        return Err(DistillError::EmptyBridgingSet);
    }
    let by_id: BTreeMap<&StatementId, &Statement> =
        statements.iter().map(|s| (&s.id, s)).collect();
    let mut payload = Vec::with_capacity(ideas.ideas.len());
    for idea in &ideas.ideas {
        let mut supporting = Vec::with_capacity(idea.supporting.len());
        for id in &idea.supporting {
            let statement = by_id
                .get(id)
                .ok_or_else(|| DistillError::UnknownStatement(id.clone()))?;
            supporting.push(serde_json::json!({"id": id, "text": statement.text}));
        }
        payload.push(serde_json::json!({
            "id": idea.id,
            "summary": idea.summary,
            "supporting": supporting,
        }));
    }
    let exemplar_block = if exemplars.is_empty() {
        "(no exemplars provided)".to_owned()
    } else {
        exemplars
            .iter()
            .map(|e| format!("- {e}"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let values = BTreeMap::from([
        ("ideas_json", fenced_json(&serde_json::Value::Array(payload))),
        ("exemplars", exemplar_block),
    ]);
    let prompt = template.render(&values, &["ideas_json"])?;

    let expected: Vec<&str> = ideas.ideas.iter().map(|i| i.id.as_str()).collect();
    let drafts = call_with_retry(
        "articulate",
        &prompt,
        backend,
        params,
        transcript,
        |value| {
            let raw: RawDrafts = serde_json::from_value(value)
                .map_err(|e| format!("expected {{\"statements\": [...]}}: {e}"))?;
            let mut by_idea: BTreeMap<&str, String> = BTreeMap::new();
            for draft in &raw.statements {
                if draft.text.trim().is_empty() {
                    return Err(format!("draft for idea {} has empty text", draft.idea_id));
                }
                if by_idea.insert(draft.idea_id.as_str(), draft.text.clone()).is_some() {
                    return Err(format!("idea {} drafted twice", draft.idea_id));
                }
            }
            for id in &expected {
                if !by_idea.contains_key(id) {
                    return Err(format!("no draft returned for idea {id}"));
                }
            }
            if by_idea.len() != expected.len() {
                return Err("drafts returned for unknown idea ids".to_owned());
            }
            Ok(expected
                .iter()
                .map(|id| by_idea.remove(id).expect("checked above"))
                .collect::<Vec<String>>())
        },
    )?;

    Ok(ideas
        .ideas
        .iter()
        .zip(drafts)
        .enumerate()
        .map(|(i, (idea, text))| CollectiveStatement {
            id: StatementId::new(format!("c{}", i + 1)),
            text,
            language: language.to_owned(),
            source_idea: idea.id.clone(),
            source_statements: idea.supporting.clone(),
            review_status: ReviewStatus::Draft,
        })
        .collect())
}

/// A reviewer's decision on one draft.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum Decision {
    Approve,
    Edit { text: String },
    Reject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Approve => f.write_str("approve"),
            Decision::Edit { .. } => f.write_str("edit"),
            Decision::Reject => f.write_str("reject"),
        }
    }
}

/// One applied decision, preserving the pre-review text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub statement_id: StatementId,
    pub action: String,
    pub original_text: String,
    /// The text that survived review; absent for rejections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_text: Option<String>,
}

/// Result of applying review decisions to the drafts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApprovalOutcome {
    /// Surviving statements, all with approved status.
    pub approved: Vec<CollectiveStatement>,
    pub log: Vec<DecisionRecord>,
    /// Set when every draft was rejected; downstream stages treat this as a
    /// warning, not an error.
    pub all_rejected: bool,
}

/// Applies review decisions: approvals keep the draft text, edits replace it
/// (provenance intact), rejections drop the draft. Every draft needs a
/// decision.
pub fn approve(
    drafts: &[CollectiveStatement],
    decisions: &BTreeMap<StatementId, Decision>,
) -> Result<ApprovalOutcome, DistillError> {
    let draft_ids: BTreeSet<&StatementId> = drafts.iter().map(|d| &d.id).collect();
    for id in decisions.keys() {
        if !draft_ids.contains(id) {
            return Err(DistillError::UnknownDecision(id.clone()));
        }
    }
    let mut approved = Vec::new();
    let mut log = Vec::new();
    for draft in drafts {
        let decision = decisions
            .get(&draft.id)
            .ok_or_else(|| DistillError::MissingDecision(draft.id.clone()))?;
        match decision {
            Decision::Approve => {
                let mut statement = draft.clone();
                statement.review_status = ReviewStatus::Approved;
                log.push(DecisionRecord {
                    statement_id: draft.id.clone(),
                    action: "approve".to_owned(),
                    original_text: draft.text.clone(),
                    final_text: Some(draft.text.clone()),
                });
                approved.push(statement);
            }
            Decision::Edit { text } => {
                if text.trim().is_empty() {
                    return Err(DistillError::EmptyEdit(draft.id.clone()));
                }
                let mut statement = draft.clone();
                statement.text = text.clone();
                statement.review_status = ReviewStatus::Approved;
                log.push(DecisionRecord {
                    statement_id: draft.id.clone(),
                    action: "edit".to_owned(),
                    original_text: draft.text.clone(),
                    final_text: Some(text.clone()),
                });
                approved.push(statement);
            }
            Decision::Reject => {
                log.push(DecisionRecord {
                    statement_id: draft.id.clone(),
                    action: "reject".to_owned(),
                    original_text: draft.text.clone(),
                    final_text: None,
                });
            }
        }
    }
    let all_rejected = approved.is_empty();
    Ok(ApprovalOutcome {
        approved,
        log,
        all_rejected,
    })
}

/// Fraction of the draft's normalized tokens that occur in at least one of
/// the source texts. 1.0 means every word of the draft came from a source.
pub fn word_preservation(draft: &str, sources: &[&str]) -> f64 {
    let draft_tokens: Vec<String> = normalize_tokens(draft)
        .split_whitespace()
        .map(str::to_owned)
        .collect();
    if draft_tokens.is_empty() {
        return 1.0;
    }
    let source_tokens: BTreeSet<String> = sources
        .iter()
        .flat_map(|s| {
            normalize_tokens(s)
                .split_whitespace()
                .map(str::to_owned)
                .collect::<Vec<_>>()
        })
        .collect();
    let preserved = draft_tokens
        .iter()
        .filter(|t| source_tokens.contains(*t))
        .count();
    preserved as f64 / draft_tokens.len() as f64
}
