//! Vote completion: inferring the unobserved cells of the agreement matrix.
//!
//! Participants vote on a sample of statements, so the raw vote matrix is
//! sparse. [`complete_votes`] fills in the missing cells with a logistic
//! matrix factorization: each participant and statement gets a bias and a
//! low-rank embedding, trained by mini-batch gradient descent on the
//! observed votes, and unobserved cells are predicted by thresholding the
//! sigmoid output. Stated cells always pass through unchanged.
//!
//! Training is deterministic for a fixed seed: entries are processed in an
//! order derived only from ids and the seed, and embeddings are initialized
//! per entity id, so reordering the input files does not change any
//! prediction.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::model::{
    CompleteVoteMatrix, DialogueBundle, GroupId, ParticipantId, Provenance, SparseVoteMatrix,
    StatementId,
};
use crate::seeds;

/// Hyperparameters for the completion model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionConfig {
    /// Embedding dimension.
    pub latent_rank: usize,
    /// L2 penalty on biases and embeddings (the global bias is exempt).
    pub l2_penalty: f64,
    pub learning_rate: f64,
    /// Full passes over the observed entries.
    pub epochs: usize,
    pub seed: u64,
    /// Predicted probability at or above which an inferred cell becomes an
    /// agree vote.
    pub threshold: f64,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            latent_rank: 5,
            l2_penalty: 0.02,
            learning_rate: 0.1,
            epochs: 500,
            seed: 0,
            threshold: 0.5,
        }
    }
}

impl CompletionConfig {
    fn validate(&self) -> Result<(), CompletionError> {
        let fail = |msg: &str| Err(CompletionError::InvalidConfig(msg.to_owned()));
        if self.latent_rank == 0 {
            return fail("latent_rank must be positive");
        }
        if !(self.l2_penalty >= 0.0) {
            return fail("l2_penalty must be non-negative");
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return fail("threshold must lie strictly between 0 and 1");
        }
        Ok(())
    }
}

/// Why votes could not be completed.
#[derive(Debug, thiserror::Error)]
pub enum CompletionError {
    #[error("invalid completion config: {0}")]
    InvalidConfig(String),
    #[error("no votes to complete")]
    EmptyVotes,
    #[error("the bundle declares no statements")]
    EmptyStatements,
    #[error("participants without any stated vote: {}", ids.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", "))]
    ParticipantsWithoutVotes { ids: Vec<ParticipantId> },
    #[error("vote references unknown participant {0}")]
    UnknownParticipant(ParticipantId),
    #[error("vote references unknown statement {0}")]
    UnknownStatement(StatementId),
    #[error("participant {participant} voted more than once on statement {statement}")]
    DuplicateVote {
        participant: ParticipantId,
        statement: StatementId,
    },
    #[error("holdout fraction {0} is outside (0, 0.5]")]
    HoldoutFraction(f64),
    #[error("only {have} stated entries; at least {need} are required to hold votes out")]
    TooFewEntries { have: usize, need: usize },
}

/// Held-out accuracy of the completion model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Number of stated entries hidden from training.
    pub held_out: usize,
    pub correct: usize,
    /// Fraction of held-out entries predicted correctly.
    pub accuracy: f64,
    /// Accuracy restricted to ballots cast by each group's members. Groups
    /// with no held-out entries are omitted.
    pub per_group: BTreeMap<GroupId, GroupAccuracy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub held_out: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// One observed vote resolved to matrix indices.
struct IndexedEntry {
    participant: usize,
    statement: usize,
    /// 1.0 for agree, 0.0 for disagree.
    value: f64,
}

/// Resolves sparse entries against the bundle's participant and statement
/// lists, in canonical (participant id, statement id) order.
fn index_entries(
    sparse: &SparseVoteMatrix,
    participant_index: &BTreeMap<&ParticipantId, usize>,
    statement_index: &BTreeMap<&StatementId, usize>,
) -> Result<Vec<IndexedEntry>, CompletionError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut entries = Vec::with_capacity(sparse.entries.len());
    for entry in sparse.canonical_entries() {
        let participant = *participant_index
            .get(&entry.participant_id)
            .ok_or_else(|| CompletionError::UnknownParticipant(entry.participant_id.clone()))?;
        let statement = *statement_index
            .get(&entry.statement_id)
            .ok_or_else(|| CompletionError::UnknownStatement(entry.statement_id.clone()))?;
        if !seen.insert((participant, statement)) {
            return Err(CompletionError::DuplicateVote {
                participant: entry.participant_id.clone(),
                statement: entry.statement_id.clone(),
            });
        }
        entries.push(IndexedEntry {
            participant,
            statement,
            value: f64::from(entry.vote.as_unit()),
        });
    }
    Ok(entries)
}

/// Fitted logistic factorization over indexed entities.
struct FittedModel {
    mu: f64,
    participant_bias: Vec<f64>,
    statement_bias: Vec<f64>,
    participant_vecs: Vec<f64>,
    statement_vecs: Vec<f64>,
    rank: usize,
    participant_observed: Vec<bool>,
    statement_observed: Vec<bool>,
}

impl FittedModel {
    /// Predicted probability that the participant agrees with the statement.
    ///
    /// Entities with no training observations contribute bias terms only,
    /// so cold statements fall back to the population tendency.
    fn probability(&self, p: usize, s: usize) -> f64 {
        let mut x = self.mu + self.participant_bias[p] + self.statement_bias[s];
        if self.participant_observed[p] && self.statement_observed[s] {
            let k = self.rank;
            let u = &self.participant_vecs[p * k..(p + 1) * k];
            let q = &self.statement_vecs[s * k..(s + 1) * k];
            x += u.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
        }
        sigmoid(x)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gradient batch size. Batches are formed from the seeded shuffle order, so
/// the constant affects convergence speed, not determinism.
const MINI_BATCH: usize = 64;

/// Trains the logistic factorization on the given entries.
///
/// `participant_ids` and `statement_ids` must cover every index the entries
/// use; initialization is keyed by id so declaration order cannot influence
/// the fit.
fn fit(
    entries: &[IndexedEntry],
    participant_ids: &[ParticipantId],
    statement_ids: &[StatementId],
    cfg: &CompletionConfig,
) -> FittedModel {
    let np = participant_ids.len();
    let ns = statement_ids.len();
    let k = cfg.latent_rank;

    let init_seed = seeds::stage_seed(cfg.seed, "completion.init");
    let init_vec = |id: &str| -> Vec<f64> {
        use rand::Rng;
        let mut rng = seeds::rng(seeds::entity_seed(init_seed, id));
        (0..k).map(|_| rng.random_range(-0.1..0.1)).collect()
    };
    let mut model = FittedModel {
        mu: 0.0,
        participant_bias: vec![0.0; np],
        statement_bias: vec![0.0; ns],
        participant_vecs: participant_ids
            .iter()
            .flat_map(|id| init_vec(id.as_str()))
            .collect(),
        statement_vecs: statement_ids
            .iter()
            .flat_map(|id| init_vec(id.as_str()))
            .collect(),
        rank: k,
        participant_observed: vec![false; np],
        statement_observed: vec![false; ns],
    };
    for e in entries {
        model.participant_observed[e.participant] = true;
        model.statement_observed[e.statement] = true;
    }

    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut order_rng = seeds::rng(seeds::stage_seed(cfg.seed, "completion.order"));

    let mut grad_mu;
    let mut grad_pb = vec![0.0; np];
    let mut grad_sb = vec![0.0; ns];
    let mut grad_pv = vec![0.0; np * k];
    let mut grad_sv = vec![0.0; ns * k];

    for _ in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        for batch in order.chunks(MINI_BATCH) {
            grad_mu = 0.0;
            for &i in batch {
                let e = &entries[i];
                let (p, s) = (e.participant, e.statement);
                let u = &model.participant_vecs[p * k..(p + 1) * k];
                let q = &model.statement_vecs[s * k..(s + 1) * k];
                let x = model.mu
                    + model.participant_bias[p]
                    + model.statement_bias[s]
                    + u.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
                let g = sigmoid(x) - e.value;
                grad_mu += g;
                grad_pb[p] += g + 2.0 * cfg.l2_penalty * model.participant_bias[p];
                grad_sb[s] += g + 2.0 * cfg.l2_penalty * model.statement_bias[s];
                for j in 0..k {
                    grad_pv[p * k + j] += g * q[j] + 2.0 * cfg.l2_penalty * u[j];
                    grad_sv[s * k + j] += g * u[j] + 2.0 * cfg.l2_penalty * q[j];
                }
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            model.mu -= scale * grad_mu;
            for &i in batch {
                let e = &entries[i];
                let (p, s) = (e.participant, e.statement);
                model.participant_bias[p] -= scale * grad_pb[p];
                model.statement_bias[s] -= scale * grad_sb[s];
                grad_pb[p] = 0.0;
                grad_sb[s] = 0.0;
                for j in 0..k {
                    model.participant_vecs[p * k + j] -= scale * grad_pv[p * k + j];
                    model.statement_vecs[s * k + j] -= scale * grad_sv[s * k + j];
                    grad_pv[p * k + j] = 0.0;
                    grad_sv[s * k + j] = 0.0;
                }
            }
        }
    }
    model
}

/// Fills in every unobserved (participant, statement) cell.
///
/// Stated votes pass through unchanged with `stated` provenance; all other
/// cells get the model's thresholded prediction with `inferred` provenance.
/// Participants with no stated votes at all are rejected, listing their ids,
/// since the model would have nothing to anchor their row.
pub fn complete_votes(
    sparse: &SparseVoteMatrix,
    bundle: &DialogueBundle,
    cfg: &CompletionConfig,
) -> Result<CompleteVoteMatrix, CompletionError> {
    cfg.validate()?;
    if sparse.entries.is_empty() {
        return Err(CompletionError::EmptyVotes);
    }
    if bundle.statements.is_empty() {
        return Err(CompletionError::EmptyStatements);
    }
    let participant_ids = bundle.participant_ids();
    let statement_ids = bundle.statement_ids();
    let participant_index: BTreeMap<&ParticipantId, usize> =
        participant_ids.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let statement_index: BTreeMap<&StatementId, usize> =
        statement_ids.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let entries = index_entries(sparse, &participant_index, &statement_index)?;

    let mut has_vote = vec![false; participant_ids.len()];
    for e in &entries {
        has_vote[e.participant] = true;
    }
    let missing: Vec<ParticipantId> = participant_ids
        .iter()
        .enumerate()
        .filter(|(i, _)| !has_vote[*i])
        .map(|(_, id)| id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CompletionError::ParticipantsWithoutVotes { ids: missing });
    }

    let np = participant_ids.len();
    let ns = statement_ids.len();
    let mut values = vec![0u8; np * ns];
    let mut provenance = vec![Provenance::Inferred; np * ns];
    let mut stated = vec![false; np * ns];
    for e in &entries {
        let cell = e.participant * ns + e.statement;
        values[cell] = e.value as u8;
        provenance[cell] = Provenance::Stated;
        stated[cell] = true;
    }

    if stated.iter().any(|s| !s) {
        let model = fit(&entries, &participant_ids, &statement_ids, cfg);
        for p in 0..np {
            for s in 0..ns {
                let cell = p * ns + s;
                if !stated[cell] {
                    values[cell] = u8::from(model.probability(p, s) >= cfg.threshold);
                }
            }
        }
    }

    Ok(CompleteVoteMatrix::new(participant_ids, statement_ids, values, provenance)
        .expect("constructed dimensions are consistent"))
}

/// Hides a random fraction of the stated votes, retrains, and reports how
/// often the model recovers them.
pub fn holdout_accuracy(
    sparse: &SparseVoteMatrix,
    bundle: &DialogueBundle,
    cfg: &CompletionConfig,
    holdout_fraction: f64,
) -> Result<AccuracyReport, CompletionError> {
    cfg.validate()?;
    if !(holdout_fraction > 0.0 && holdout_fraction <= 0.5) {
        return Err(CompletionError::HoldoutFraction(holdout_fraction));
    }
    if bundle.statements.is_empty() {
        return Err(CompletionError::EmptyStatements);
    }
    let participant_ids = bundle.participant_ids();
    let statement_ids = bundle.statement_ids();
    let participant_index: BTreeMap<&ParticipantId, usize> =
        participant_ids.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let statement_index: BTreeMap<&StatementId, usize> =
        statement_ids.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let entries = index_entries(sparse, &participant_index, &statement_index)?;

    const MIN_ENTRIES: usize = 10;
    if entries.len() < MIN_ENTRIES {
        return Err(CompletionError::TooFewEntries {
            have: entries.len(),
            need: MIN_ENTRIES,
        });
    }
    let held = ((entries.len() as f64) * holdout_fraction).floor().max(1.0) as usize;

    let mut indices: Vec<usize> = (0..entries.len()).collect();
    indices.shuffle(&mut seeds::rng(seeds::stage_seed(cfg.seed, "holdout.split")));
    let (held_indices, train_indices) = indices.split_at(held);

    let train: Vec<IndexedEntry> = train_indices
        .iter()
        .map(|&i| IndexedEntry {
            participant: entries[i].participant,
            statement: entries[i].statement,
            value: entries[i].value,
        })
        .collect();
    let model = fit(&train, &participant_ids, &statement_ids, cfg);

    let membership = bundle.group_partition().membership();
    let mut correct = 0usize;
    let mut per_group: BTreeMap<GroupId, GroupAccuracy> = BTreeMap::new();
    for &i in held_indices {
        let e = &entries[i];
        let predicted = f64::from(model.probability(e.participant, e.statement) >= cfg.threshold);
        let hit = predicted == e.value;
        if hit {
            correct += 1;
        }
        if let Some(gid) = membership.get(&participant_ids[e.participant]) {
            let acc = per_group.entry(gid.clone()).or_insert(GroupAccuracy {
                held_out: 0,
                correct: 0,
                accuracy: 0.0,
            });
            acc.held_out += 1;
            if hit {
                acc.correct += 1;
            }
        }
    }
    for acc in per_group.values_mut() {
        acc.accuracy = acc.correct as f64 / acc.held_out as f64;
    }
    Ok(AccuracyReport {
        held_out: held,
        correct,
        accuracy: correct as f64 / held as f64,
        per_group,
    })
}
