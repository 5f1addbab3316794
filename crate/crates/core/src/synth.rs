//! Synthetic dialogues with planted ground truth.
//!
//! [`generate_synthetic_dialogue`] builds a complete [`DialogueBundle`]
//! whose statements fall into three planted classes: bridging statements
//! every group tends to agree with, divisive statements one group supports
//! and the others reject, and filler statements with coin-flip support. The
//! accompanying [`SyntheticManifest`] records each statement's class, so
//! selection quality can be scored against the truth.
//!
//! Final votes are synthesized for the collective statements the pipeline
//! itself would produce: the generator runs the deterministic distillation
//! front internally (same default configs, same seed derivation) and then
//! samples Likert ratings and rankings consistent with the planted classes.
//! Everything is a pure function of the [`SyntheticSpec`], so a given seed
//! always yields the same bundle.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bridging::BridgingConfig;
use crate::completion::CompletionConfig;
use crate::model::{
    AgreeVote, DialogueBundle, FinalVoteRecord, Group, GroupPartition, LikertBallot, Participant,
    RankBallot, SparseVoteMatrix, Statement, StatementId, VoteEntry,
};
use crate::pipeline::{distill_dialogue, DistillConfig, PipelineError};
use crate::seeds::{rng, stage_seed};

/// File name the manifest is written under next to the bundle.
pub const MANIFEST_FILE: &str = "manifest.json";

/// The planted role of a synthetic statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantedClass {
    /// High agreement probability in every group.
    Bridging,
    /// High agreement in the first group, low elsewhere.
    Divisive,
    /// Near-even agreement everywhere.
    Filler,
}

/// Shape and noise parameters of a synthetic dialogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Participants per group.
    pub group_sizes: Vec<usize>,
    pub bridging_count: usize,
    pub divisive_count: usize,
    pub filler_count: usize,
    /// Per-group probability that a member agrees with a bridging statement.
    pub bridging_agree_probs: Vec<f64>,
    pub divisive_agree_probs: Vec<f64>,
    pub filler_agree_probs: Vec<f64>,
    /// Fraction of participant-statement cells that receive a vote;
    /// 1.0 makes the matrix fully dense.
    pub sparsity: f64,
    /// Per-ballot probability that a final Likert rating flips direction.
    pub likert_noise: f64,
    /// Per-position probability of an adjacent swap in a final ranking.
    pub rank_noise: f64,
    /// Also synthesize final votes on the pipeline's collective statements.
    pub include_final_votes: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            group_sizes: vec![70, 28, 13],
            bridging_count: 10,
            divisive_count: 20,
            filler_count: 20,
            bridging_agree_probs: vec![0.95, 0.95, 0.95],
            divisive_agree_probs: vec![0.9, 0.1, 0.1],
            filler_agree_probs: vec![0.5, 0.5, 0.5],
            sparsity: 0.7,
            likert_noise: 0.002,
            rank_noise: 0.02,
            include_final_votes: true,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |m: &str| Err(SynthError::InvalidSpec(m.to_owned()));
        if self.group_sizes.is_empty() {
            return invalid("at least one group is required");
        }
        if self.group_sizes.iter().any(|&n| n == 0) {
            return invalid("every group needs at least one member");
        }
        if self.bridging_count + self.divisive_count + self.filler_count == 0 {
            return invalid("at least one statement is required");
        }
        for (name, probs) in [
            ("bridging_agree_probs", &self.bridging_agree_probs),
            ("divisive_agree_probs", &self.divisive_agree_probs),
            ("filler_agree_probs", &self.filler_agree_probs),
        ] {
            if probs.len() != self.group_sizes.len() {
                return invalid(&format!("{name} needs one probability per group"));
            }
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return invalid(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return invalid("sparsity must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.likert_noise) {
            return invalid("likert_noise must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.rank_noise) {
            return invalid("rank_noise must lie in [0, 1)");
        }
        Ok(())
    }

    fn agree_probs(&self, class: PlantedClass) -> &[f64] {
        match class {
            PlantedClass::Bridging => &self.bridging_agree_probs,
            PlantedClass::Divisive => &self.divisive_agree_probs,
            PlantedClass::Filler => &self.filler_agree_probs,
        }
    }
}

/// Ground truth written next to a synthetic bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticManifest {
    /// Planted class of every dialogue statement.
    pub classes: BTreeMap<StatementId, PlantedClass>,
    /// Source dialogue statements of every synthesized collective
    /// statement; empty when final votes were not generated.
    pub collective_sources: BTreeMap<StatementId, Vec<StatementId>>,
    /// The settings the bundle was generated from.
    pub spec: SyntheticSpec,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("previewing collective statements: {0}")]
    Preview(#[from] PipelineError),
}

/// Builds a bundle with planted statement classes and, unless disabled,
/// final votes on the collective statements the pipeline would emit for it.
pub fn generate_synthetic_dialogue(
    spec: &SyntheticSpec,
) -> Result<(DialogueBundle, SyntheticManifest), SynthError> {
    spec.validate()?;

    let mut groups = Vec::with_capacity(spec.group_sizes.len());
    let mut participants = Vec::new();
    let total: usize = spec.group_sizes.iter().sum();
    let id_width = total.to_string().len().max(3);
    let mut next = 1;
    for (gi, &size) in spec.group_sizes.iter().enumerate() {
        let group_id = format!("g{}", gi + 1);
        let mut members = Vec::with_capacity(size);
        for _ in 0..size {
            let pid = format!("p{next:0id_width$}");
            next += 1;
            members.push(pid.as_str().into());
            participants.push(Participant {
                id: pid.as_str().into(),
                group_id: group_id.as_str().into(),
                demographics: BTreeMap::new(),
            });
        }
        groups.push(Group {
            id: group_id.as_str().into(),
            name: format!("Group {}", gi + 1),
            members,
        });
    }

    let statement_total = spec.bridging_count + spec.divisive_count + spec.filler_count;
    let sid_width = statement_total.to_string().len().max(3);
    let mut statements = Vec::with_capacity(statement_total);
    let mut classes = BTreeMap::new();
    let class_blocks = [
        (PlantedClass::Bridging, spec.bridging_count),
        (PlantedClass::Divisive, spec.divisive_count),
        (PlantedClass::Filler, spec.filler_count),
    ];
    let mut index = 1;
    for (class, count) in class_blocks {
        for _ in 0..count {
            let sid: StatementId = format!("s{index:0sid_width$}").as_str().into();
            let text = match class {
                PlantedClass::Bridging => {
                    format!("Both communities should invest in shared priority {index}.")
                }
                PlantedClass::Divisive => {
                    format!("Only one side should control decision area {index}.")
                }
                PlantedClass::Filler => {
                    format!("Neighborhood topic {index} needs further discussion.")
                }
            };
            statements.push(Statement {
                id: sid.clone(),
                prompt_id: "q1".to_owned(),
                text,
                language: "en".to_owned(),
                author_id: None,
            });
            classes.insert(sid, class);
            index += 1;
        }
    }

    let group_of: Vec<usize> = spec
        .group_sizes
        .iter()
        .enumerate()
        .flat_map(|(gi, &size)| std::iter::repeat_n(gi, size))
        .collect();
    let mut vote_rng = rng(stage_seed(spec.seed, "synth.votes"));
    let mut entries = Vec::new();
    for (pi, participant) in participants.iter().enumerate() {
        let gi = group_of[pi];
        let mut cast = 0usize;
        for statement in &statements {
            let observed = vote_rng.random_bool(spec.sparsity);
            let prob = spec.agree_probs(classes[&statement.id])[gi];
            let agree = vote_rng.random_bool(prob);
            if observed {
                cast += 1;
                entries.push(VoteEntry {
                    participant_id: participant.id.clone(),
                    statement_id: statement.id.clone(),
                    vote: if agree {
                        AgreeVote::Agree
                    } else {
                        AgreeVote::Disagree
                    },
                });
            }
        }
        if cast == 0 {
            let si = vote_rng.random_range(0..statements.len());
            let statement = &statements[si];
            let prob = spec.agree_probs(classes[&statement.id])[gi];
            entries.push(VoteEntry {
                participant_id: participant.id.clone(),
                statement_id: statement.id.clone(),
                vote: if vote_rng.random_bool(prob) {
                    AgreeVote::Agree
                } else {
                    AgreeVote::Disagree
                },
            });
        }
    }

    let mut bundle = DialogueBundle {
        participants,
        partition: GroupPartition { groups },
        statements,
        votes: SparseVoteMatrix { entries },
        final_votes: None,
    };

    let mut collective_sources = BTreeMap::new();
    if spec.include_final_votes {
        let distilled = distill_dialogue(
            &bundle,
            spec.seed,
            &CompletionConfig::default(),
            &BridgingConfig::default(),
            &DistillConfig::default(),
        )?;
        for draft in &distilled.drafts {
            collective_sources.insert(draft.id.clone(), draft.source_statements.clone());
        }
        bundle.final_votes = Some(final_votes(spec, &bundle, &collective_sources, &classes));
    }

    let manifest = SyntheticManifest {
        classes,
        collective_sources,
        spec: spec.clone(),
    };
    Ok((bundle, manifest))
}

/// Samples final votes consistent with the planted classes: per group and
/// collective statement, a class-probability share of members agrees
/// (rating 4 or 5, the rest 1 to 3), a small noise term flips directions,
/// and each participant ranks statements by their own ratings.
fn final_votes(
    spec: &SyntheticSpec,
    bundle: &DialogueBundle,
    collective_sources: &BTreeMap<StatementId, Vec<StatementId>>,
    classes: &BTreeMap<StatementId, PlantedClass>,
) -> FinalVoteRecord {
    let collective_ids: Vec<&StatementId> = collective_sources.keys().collect();
    let mut likert_rng = rng(stage_seed(spec.seed, "synth.likert"));
    let mut likert = Vec::new();
    let mut ratings: BTreeMap<(&str, &StatementId), u8> = BTreeMap::new();
    for (gi, group) in bundle.partition.groups.iter().enumerate() {
        for cid in &collective_ids {
            let class = collective_sources[*cid]
                .first()
                .map(|sid| classes[sid])
                .unwrap_or(PlantedClass::Filler);
            let prob = spec.agree_probs(class)[gi];
            let size = group.members.len();
            let agree_count = ((prob * size as f64).round() as usize).min(size);
            let mut order: Vec<usize> = (0..size).collect();
            order.shuffle(&mut likert_rng);
            let mut agrees = vec![false; size];
            for &i in order.iter().take(agree_count) {
                agrees[i] = true;
            }
            for (i, member) in group.members.iter().enumerate() {
                let mut agree = agrees[i];
                if likert_rng.random_bool(spec.likert_noise) {
                    agree = !agree;
                }
                let value = if agree {
                    likert_rng.random_range(4..=5u8)
                } else {
                    likert_rng.random_range(1..=3u8)
                };
                ratings.insert((member.as_str(), cid), value);
                likert.push(LikertBallot {
                    participant_id: member.clone(),
                    statement_id: (*cid).clone(),
                    value,
                });
            }
        }
    }

    let mut rank_rng = rng(stage_seed(spec.seed, "synth.ranks"));
    let mut rankings = Vec::new();
    for group in &bundle.partition.groups {
        for member in &group.members {
            let mut ranking: Vec<StatementId> =
                collective_ids.iter().map(|c| (*c).clone()).collect();
            ranking.sort_by(|a, b| {
                let ra = ratings[&(member.as_str(), a)];
                let rb = ratings[&(member.as_str(), b)];
                rb.cmp(&ra).then_with(|| a.cmp(b))
            });
            for i in 0..ranking.len().saturating_sub(1) {
                if rank_rng.random_bool(spec.rank_noise) {
                    ranking.swap(i, i + 1);
                }
            }
            rankings.push(RankBallot {
                participant_id: member.clone(),
                ranking,
            });
        }
    }
    FinalVoteRecord { likert, rankings }
}
