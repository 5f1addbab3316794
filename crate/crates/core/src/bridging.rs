//! Bridging-based ranking and selection of statements.
//!
//! Two complementary signals identify statements that bridge groups:
//!
//! * **Max-min agreement**: [`max_min_agreement`] scores a statement by the
//!   smallest per-group agreement fraction, so a statement only scores well
//!   when every group supports it.
//! * **Latent factor model**: [`fit_latent_factor_model`] fits
//!   `v̂(s,p) ≈ μ + i_p + i_s + f_p·f_s` to votes encoded as ±1. The factor
//!   term absorbs polarized voting, leaving the statement intercept `i_s` to
//!   measure support beyond group lines. Statements whose `(‖f_s‖, i_s)`
//!   lies near the target point are bridging candidates even when raw
//!   agreement is uneven.
//!
//! [`select_bridging`] takes the union of both criteria, with per-statement
//! diagnostics explaining each decision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::model::{
    CompleteVoteMatrix, Group, GroupPartition, ParticipantId, Provenance, SparseVoteMatrix,
    StatementId,
};
use crate::seeds;

/// Point in the (factor norm, intercept) plane that ideal bridging
/// statements sit near: no polarization, strong shared support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceTarget {
    pub factor: f64,
    pub intercept: f64,
}

impl Default for DistanceTarget {
    fn default() -> Self {
        DistanceTarget {
            factor: 0.0,
            intercept: 2.0,
        }
    }
}

/// Thresholds and fit hyperparameters for bridging selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BridgingConfig {
    /// Minimum max-min agreement for selection by the first criterion.
    pub amin_threshold: f64,
    /// Maximum distance to `distance_target` for selection by the second.
    pub distance_threshold: f64,
    pub distance_target: DistanceTarget,
    /// Length of the factor vectors; 1 fits scalar factors.
    pub factor_dim: usize,
    /// Per-observation L2 penalty on the intercepts i_p and i_s.
    pub intercept_penalty: f64,
    /// Per-observation L2 penalty on the factor vectors.
    pub factor_penalty: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Restrict both agreement fractions and the model fit to stated votes,
    /// ignoring inferred cells.
    pub stated_only: bool,
}

impl Default for BridgingConfig {
    fn default() -> Self {
        BridgingConfig {
            amin_threshold: 0.7,
            distance_threshold: 0.5,
            distance_target: DistanceTarget::default(),
            factor_dim: 1,
            intercept_penalty: 0.15,
            factor_penalty: 0.03,
            learning_rate: 0.05,
            epochs: 300,
            seed: 0,
            stated_only: false,
        }
    }
}

impl BridgingConfig {
    fn validate(&self) -> Result<(), BridgingError> {
        let fail = |msg: &str| Err(BridgingError::InvalidConfig(msg.to_owned()));
        if !(0.0..=1.0).contains(&self.amin_threshold) {
            return fail("amin_threshold must lie in [0, 1]");
        }
        if !(self.distance_threshold >= 0.0) {
            return fail("distance_threshold must be non-negative");
        }
        if self.factor_dim == 0 {
            return fail("factor_dim must be positive");
        }
        if !(self.intercept_penalty >= 0.0) || !(self.factor_penalty >= 0.0) {
            return fail("penalties must be non-negative");
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs must be positive");
        }
        Ok(())
    }
}

/// Why a bridging computation failed.
#[derive(Debug, thiserror::Error)]
pub enum BridgingError {
    #[error("invalid bridging config: {0}")]
    InvalidConfig(String),
    #[error("group {0} has no members")]
    EmptyGroup(crate::model::GroupId),
    #[error("the partition declares no groups")]
    EmptyPartition,
    #[error("participant {0} is not covered by the vote matrix")]
    UnknownParticipant(ParticipantId),
    #[error("statement {0} is not covered by the vote matrix")]
    UnknownStatement(StatementId),
    #[error("statement {0} is not present in the fitted model")]
    StatementNotFitted(StatementId),
    #[error("too little data to fit: need at least 2 participants, 2 statements, and 1 vote, \
             found {participants} participant(s), {statements} statement(s), {votes} vote(s)")]
    DegenerateInput {
        participants: usize,
        statements: usize,
        votes: usize,
    },
}

/// Fraction of `group` members whose completed vote on `statement` is agree.
pub fn agreement_fraction(
    matrix: &CompleteVoteMatrix,
    statement: &StatementId,
    group: &Group,
) -> Result<f64, BridgingError> {
    if group.members.is_empty() {
        return Err(BridgingError::EmptyGroup(group.id.clone()));
    }
    let mut agree = 0usize;
    for member in &group.members {
        let value = matrix
            .value(member, statement)
            .ok_or_else(|| match matrix.participants().contains(member) {
                true => BridgingError::UnknownStatement(statement.clone()),
                false => BridgingError::UnknownParticipant(member.clone()),
            })?;
        agree += usize::from(value);
    }
    Ok(agree as f64 / group.members.len() as f64)
}

/// Minimum agreement fraction across the partition's groups.
pub fn max_min_agreement(
    matrix: &CompleteVoteMatrix,
    statement: &StatementId,
    partition: &GroupPartition,
) -> Result<f64, BridgingError> {
    if partition.groups.is_empty() {
        return Err(BridgingError::EmptyPartition);
    }
    let mut min = f64::INFINITY;
    for group in &partition.groups {
        min = min.min(agreement_fraction(matrix, statement, group)?);
    }
    Ok(min)
}

/// Like [`agreement_fraction`] but over stated cells only: the denominator is
/// the number of group members with a stated vote on the statement, and a
/// group with none contributes 0.
fn stated_agreement_fraction(
    matrix: &CompleteVoteMatrix,
    statement: &StatementId,
    group: &Group,
) -> Result<f64, BridgingError> {
    if group.members.is_empty() {
        return Err(BridgingError::EmptyGroup(group.id.clone()));
    }
    let mut agree = 0usize;
    let mut stated = 0usize;
    for member in &group.members {
        let value = matrix
            .value(member, statement)
            .ok_or_else(|| match matrix.participants().contains(member) {
                true => BridgingError::UnknownStatement(statement.clone()),
                false => BridgingError::UnknownParticipant(member.clone()),
            })?;
        if matrix.provenance(member, statement) == Some(Provenance::Stated) {
            stated += 1;
            agree += usize::from(value);
        }
    }
    if stated == 0 {
        return Ok(0.0);
    }
    Ok(agree as f64 / stated as f64)
}

/// Votes the factor model trains on, encoded agree=+1, disagree=−1.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteObservations {
    /// (participant, statement, ±1), in canonical id order.
    entries: Vec<(ParticipantId, StatementId, f64)>,
}

impl VoteObservations {
    /// All cells of a completed matrix, stated and inferred alike.
    pub fn from_complete(matrix: &CompleteVoteMatrix) -> Self {
        Self::from_matrix(matrix, false)
    }

    /// Only the stated cells of a completed matrix.
    pub fn from_stated(matrix: &CompleteVoteMatrix) -> Self {
        Self::from_matrix(matrix, true)
    }

    fn from_matrix(matrix: &CompleteVoteMatrix, stated_only: bool) -> Self {
        let mut entries = Vec::new();
        for p in matrix.participants() {
            for s in matrix.statements() {
                if stated_only && matrix.provenance(p, s) != Some(Provenance::Stated) {
                    continue;
                }
                let value = matrix.value(p, s).expect("cell exists");
                entries.push((p.clone(), s.clone(), signed(value)));
            }
        }
        entries.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        VoteObservations { entries }
    }

    /// Observed sparse votes.
    pub fn from_sparse(sparse: &SparseVoteMatrix) -> Self {
        let mut entries: Vec<(ParticipantId, StatementId, f64)> = sparse
            .entries
            .iter()
            .map(|e| {
                (
                    e.participant_id.clone(),
                    e.statement_id.clone(),
                    signed(e.vote.as_unit()),
                )
            })
            .collect();
        entries.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        VoteObservations { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn signed(value: u8) -> f64 {
    if value == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Fitted parameters of the latent factor model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorModelParams {
    /// Global intercept μ.
    pub mu: f64,
    pub participant_intercepts: BTreeMap<ParticipantId, f64>,
    pub statement_intercepts: BTreeMap<StatementId, f64>,
    pub participant_factors: BTreeMap<ParticipantId, Vec<f64>>,
    pub statement_factors: BTreeMap<StatementId, Vec<f64>>,
    pub factor_dim: usize,
}

impl FactorModelParams {
    /// Model prediction μ + i_p + i_s + f_p·f_s for a fitted pair.
    pub fn predict(&self, participant: &ParticipantId, statement: &StatementId) -> Option<f64> {
        let ip = self.participant_intercepts.get(participant)?;
        let is = self.statement_intercepts.get(statement)?;
        let fp = self.participant_factors.get(participant)?;
        let fs = self.statement_factors.get(statement)?;
        let dot: f64 = fp.iter().zip(fs).map(|(a, b)| a * b).sum();
        Some(self.mu + ip + is + dot)
    }

    /// Euclidean norm of a statement's factor vector.
    pub fn factor_norm(&self, statement: &StatementId) -> Option<f64> {
        let fs = self.statement_factors.get(statement)?;
        Some(fs.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

/// Fits the latent factor model to ±1 votes by stochastic gradient descent
/// on the squared error with per-observation L2 penalties on the intercepts
/// and factors (μ is unpenalized).
pub fn fit_latent_factor_model(
    observations: &VoteObservations,
    cfg: &BridgingConfig,
) -> Result<FactorModelParams, BridgingError> {
    cfg.validate()?;
    let participant_ids: BTreeSet<&ParticipantId> =
        observations.entries.iter().map(|e| &e.0).collect();
    let statement_ids: BTreeSet<&StatementId> =
        observations.entries.iter().map(|e| &e.1).collect();
    if participant_ids.len() < 2 || statement_ids.len() < 2 || observations.entries.is_empty() {
        return Err(BridgingError::DegenerateInput {
            participants: participant_ids.len(),
            statements: statement_ids.len(),
            votes: observations.entries.len(),
        });
    }

    let participants: Vec<&ParticipantId> = participant_ids.into_iter().collect();
    let statements: Vec<&StatementId> = statement_ids.into_iter().collect();
    let p_index: BTreeMap<&ParticipantId, usize> =
        participants.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let s_index: BTreeMap<&StatementId, usize> =
        statements.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    let k = cfg.factor_dim;
    let init_seed = seeds::stage_seed(cfg.seed, "bridging.init");
    let init_vec = |id: &str| -> Vec<f64> {
        use rand::Rng;
        let mut rng = seeds::rng(seeds::entity_seed(init_seed, id));
        (0..k).map(|_| rng.random_range(-0.01..0.01)).collect()
    };

    let mut mu = 0.0;
    let mut i_p = vec![0.0; participants.len()];
    let mut i_s = vec![0.0; statements.len()];
    let mut f_p: Vec<f64> = participants
        .iter()
        .flat_map(|p| init_vec(p.as_str()))
        .collect();
    let mut f_s: Vec<f64> = statements
        .iter()
        .flat_map(|s| init_vec(s.as_str()))
        .collect();

    let indexed: Vec<(usize, usize, f64)> = observations
        .entries
        .iter()
        .map(|(p, s, v)| (p_index[p], s_index[s], *v))
        .collect();

    let mut order: Vec<usize> = (0..indexed.len()).collect();
    let mut order_rng = seeds::rng(seeds::stage_seed(cfg.seed, "bridging.order"));
    let lr = cfg.learning_rate;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        for &i in &order {
            let (p, s, v) = indexed[i];
            let fp = &f_p[p * k..(p + 1) * k];
            let fs = &f_s[s * k..(s + 1) * k];
            let dot: f64 = fp.iter().zip(fs).map(|(a, b)| a * b).sum();
            let err = v - (mu + i_p[p] + i_s[s] + dot);
            mu += lr * err;
            i_p[p] += lr * (err - cfg.intercept_penalty * i_p[p]);
            i_s[s] += lr * (err - cfg.intercept_penalty * i_s[s]);
            for j in 0..k {
                let fpj = f_p[p * k + j];
                let fsj = f_s[s * k + j];
                f_p[p * k + j] += lr * (err * fsj - cfg.factor_penalty * fpj);
                f_s[s * k + j] += lr * (err * fpj - cfg.factor_penalty * fsj);
            }
        }
    }

    Ok(FactorModelParams {
        mu,
        participant_intercepts: participants
            .iter()
            .zip(&i_p)
            .map(|(p, v)| ((*p).clone(), *v))
            .collect(),
        statement_intercepts: statements
            .iter()
            .zip(&i_s)
            .map(|(s, v)| ((*s).clone(), *v))
            .collect(),
        participant_factors: participants
            .iter()
            .enumerate()
            .map(|(i, p)| ((*p).clone(), f_p[i * k..(i + 1) * k].to_vec()))
            .collect(),
        statement_factors: statements
            .iter()
            .enumerate()
            .map(|(i, s)| ((*s).clone(), f_s[i * k..(i + 1) * k].to_vec()))
            .collect(),
        factor_dim: k,
    })
}

/// Euclidean distance between a statement's (‖f_s‖, i_s) and the target.
pub fn statement_distance(
    params: &FactorModelParams,
    statement: &StatementId,
    target: DistanceTarget,
) -> Result<f64, BridgingError> {
    let norm = params
        .factor_norm(statement)
        .ok_or_else(|| BridgingError::StatementNotFitted(statement.clone()))?;
    let intercept = params
        .statement_intercepts
        .get(statement)
        .ok_or_else(|| BridgingError::StatementNotFitted(statement.clone()))?;
    let df = norm - target.factor;
    let di = intercept - target.intercept;
    Ok((df * df + di * di).sqrt())
}

/// Which criterion selected a statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionReason {
    Amin,
    Distance,
    Both,
}

impl fmt::Display for SelectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionReason::Amin => f.write_str("min agreement"),
            SelectionReason::Distance => f.write_str("distance"),
            SelectionReason::Both => f.write_str("both"),
        }
    }
}

/// Scores and selection outcome for one statement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementDiagnostics {
    pub statement_id: StatementId,
    /// Minimum per-group agreement fraction.
    pub a_min: f64,
    /// Fitted statement intercept i_s.
    pub intercept: f64,
    /// Fitted factor vector f_s.
    pub factor: Vec<f64>,
    pub factor_norm: f64,
    /// Distance from (‖f_s‖, i_s) to the configured target.
    pub distance: f64,
    /// Present when the statement was selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<SelectionReason>,
}

/// The selected bridging set with full diagnostics and the thresholds used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgingSet {
    /// Selected statement ids, in the matrix's statement order.
    pub selected: Vec<StatementId>,
    /// One entry per statement in the matrix, selected or not.
    pub diagnostics: Vec<StatementDiagnostics>,
    /// The configuration the selection ran with.
    pub config: BridgingConfig,
}

impl BridgingSet {
    pub fn is_selected(&self, statement: &StatementId) -> bool {
        self.selected.contains(statement)
    }
}

/// Selects the union of statements passing the max-min agreement threshold
/// and statements close to the distance target.
///
/// With `stated_only` set, agreement fractions count only stated votes; the
/// caller is expected to have fitted `params` on stated votes as well.
pub fn select_bridging(
    matrix: &CompleteVoteMatrix,
    partition: &GroupPartition,
    params: &FactorModelParams,
    cfg: &BridgingConfig,
) -> Result<BridgingSet, BridgingError> {
    cfg.validate()?;
    if partition.groups.is_empty() {
        return Err(BridgingError::EmptyPartition);
    }
    let mut selected = Vec::new();
    let mut diagnostics = Vec::with_capacity(matrix.statements().len());
    for statement in matrix.statements() {
        let a_min = if cfg.stated_only {
            let mut min = f64::INFINITY;
            for group in &partition.groups {
                min = min.min(stated_agreement_fraction(matrix, statement, group)?);
            }
            min
        } else {
            max_min_agreement(matrix, statement, partition)?
        };
        let intercept = *params
            .statement_intercepts
            .get(statement)
            .ok_or_else(|| BridgingError::StatementNotFitted(statement.clone()))?;
        let factor = params
            .statement_factors
            .get(statement)
            .ok_or_else(|| BridgingError::StatementNotFitted(statement.clone()))?
            .clone();
        let factor_norm = factor.iter().map(|x| x * x).sum::<f64>().sqrt();
        let distance = statement_distance(params, statement, cfg.distance_target)?;

        let by_amin = a_min >= cfg.amin_threshold;
        let by_distance = distance <= cfg.distance_threshold;
        let reason = match (by_amin, by_distance) {
            (true, true) => Some(SelectionReason::Both),
            (true, false) => Some(SelectionReason::Amin),
            (false, true) => Some(SelectionReason::Distance),
            (false, false) => None,
        };
        if reason.is_some() {
            selected.push(statement.clone());
        }
        diagnostics.push(StatementDiagnostics {
            statement_id: statement.clone(),
            a_min,
            intercept,
            factor,
            factor_norm,
            distance,
            reason,
        });
    }
    Ok(BridgingSet {
        selected,
        diagnostics,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Provenance;

    fn matrix(
        participants: &[&str],
        statements: &[&str],
        values: &[u8],
    ) -> CompleteVoteMatrix {
        CompleteVoteMatrix::new(
            participants.iter().map(|p| (*p).into()).collect(),
            statements.iter().map(|s| (*s).into()).collect(),
            values.to_vec(),
            vec![Provenance::Stated; values.len()],
        )
        .unwrap()
    }

    fn group(id: &str, members: &[&str]) -> Group {
        Group {
            id: id.into(),
            name: id.to_uppercase(),
            members: members.iter().map(|m| (*m).into()).collect(),
        }
    }

    #[test]
    fn agreement_fraction_counts_group_members() {
        let m = matrix(&["p1", "p2", "p3", "p4"], &["s1"], &[1, 1, 0, 1]);
        let g = group("g1", &["p1", "p2", "p3", "p4"]);
        assert_eq!(agreement_fraction(&m, &"s1".into(), &g).unwrap(), 0.75);
    }

    #[test]
    fn agreement_fraction_extremes() {
        let m = matrix(&["p1", "p2"], &["s1", "s2"], &[1, 0, 1, 0]);
        let g = group("g1", &["p1", "p2"]);
        assert_eq!(agreement_fraction(&m, &"s1".into(), &g).unwrap(), 1.0);
        assert_eq!(agreement_fraction(&m, &"s2".into(), &g).unwrap(), 0.0);
    }

    #[test]
    fn empty_group_is_an_error() {
        let m = matrix(&["p1"], &["s1"], &[1]);
        let g = group("g1", &[]);
        assert!(matches!(
            agreement_fraction(&m, &"s1".into(), &g),
            Err(BridgingError::EmptyGroup(_))
        ));
    }

    #[test]
    fn max_min_takes_the_smallest_group_fraction() {
        // g1 agrees 2/2, g2 agrees 1/2, g3 agrees 0/1.
        let m = matrix(
            &["p1", "p2", "p3", "p4", "p5"],
            &["s1"],
            &[1, 1, 1, 0, 0],
        );
        let partition = GroupPartition {
            groups: vec![
                group("g1", &["p1", "p2"]),
                group("g2", &["p3", "p4"]),
                group("g3", &["p5"]),
            ],
        };
        assert_eq!(max_min_agreement(&m, &"s1".into(), &partition).unwrap(), 0.0);
    }

    #[test]
    fn max_min_with_single_group_equals_its_fraction() {
        let m = matrix(&["p1", "p2"], &["s1"], &[1, 0]);
        let partition = GroupPartition {
            groups: vec![group("g1", &["p1", "p2"])],
        };
        assert_eq!(max_min_agreement(&m, &"s1".into(), &partition).unwrap(), 0.5);
    }

    fn hand_params(entries: &[(&str, f64, f64)]) -> FactorModelParams {
        FactorModelParams {
            mu: 0.0,
            participant_intercepts: BTreeMap::new(),
            statement_intercepts: entries
                .iter()
                .map(|(s, _, i)| ((*s).into(), *i))
                .collect(),
            participant_factors: BTreeMap::new(),
            statement_factors: entries
                .iter()
                .map(|(s, f, _)| ((*s).into(), vec![*f]))
                .collect(),
            factor_dim: 1,
        }
    }

    #[test]
    fn statement_distance_examples() {
        let params = hand_params(&[("a", 0.0, 2.0), ("b", 3.0, -2.0), ("c", 0.0, 0.0)]);
        let target = DistanceTarget::default();
        assert_eq!(statement_distance(&params, &"a".into(), target).unwrap(), 0.0);
        assert_eq!(statement_distance(&params, &"b".into(), target).unwrap(), 5.0);
        assert_eq!(statement_distance(&params, &"c".into(), target).unwrap(), 2.0);
        assert!(matches!(
            statement_distance(&params, &"zz".into(), target),
            Err(BridgingError::StatementNotFitted(_))
        ));
    }

    #[test]
    fn fit_is_deterministic_for_a_seed() {
        let m = matrix(
            &["p1", "p2", "p3"],
            &["s1", "s2", "s3"],
            &[1, 0, 1, 0, 1, 1, 1, 1, 0],
        );
        let obs = VoteObservations::from_complete(&m);
        let cfg = BridgingConfig {
            epochs: 50,
            ..BridgingConfig::default()
        };
        let a = fit_latent_factor_model(&obs, &cfg).unwrap();
        let b = fit_latent_factor_model(&obs, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        let m = matrix(&["p1"], &["s1", "s2"], &[1, 0]);
        let obs = VoteObservations::from_complete(&m);
        let err = fit_latent_factor_model(&obs, &BridgingConfig::default()).unwrap_err();
        assert!(matches!(err, BridgingError::DegenerateInput { participants: 1, .. }));
    }

    #[test]
    fn all_agree_fixture_has_positive_predictions_and_tiny_factors() {
        let participants: Vec<String> = (0..8).map(|i| format!("p{i}")).collect();
        let statements: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
        let p_refs: Vec<&str> = participants.iter().map(String::as_str).collect();
        let s_refs: Vec<&str> = statements.iter().map(String::as_str).collect();
        let m = matrix(&p_refs, &s_refs, &vec![1u8; 48]);
        let obs = VoteObservations::from_complete(&m);
        let params = fit_latent_factor_model(&obs, &BridgingConfig::default()).unwrap();
        for p in m.participants() {
            for s in m.statements() {
                assert!(params.predict(p, s).unwrap() > 0.0);
            }
        }
        let mean_norm: f64 = m
            .statements()
            .iter()
            .map(|s| params.factor_norm(s).unwrap())
            .sum::<f64>()
            / m.statements().len() as f64;
        assert!(mean_norm <= 0.1, "mean factor norm {mean_norm} too large");
    }

    #[test]
    fn polarized_statements_get_larger_factors_than_bridging_ones() {
        // Two opposed participant clusters: everyone agrees on the first
        // three statements, and the clusters vote oppositely on the rest.
        let participants: Vec<String> = (0..12).map(|i| format!("p{i:02}")).collect();
        let statements: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
        let mut values = Vec::new();
        for p in 0..12 {
            let cluster = p % 2;
            for s in 0..6 {
                if s < 3 {
                    values.push(1);
                } else {
                    values.push(u8::from(cluster == 0));
                }
            }
        }
        let p_refs: Vec<&str> = participants.iter().map(String::as_str).collect();
        let s_refs: Vec<&str> = statements.iter().map(String::as_str).collect();
        let m = matrix(&p_refs, &s_refs, &values);
        let obs = VoteObservations::from_complete(&m);
        let params = fit_latent_factor_model(&obs, &BridgingConfig::default()).unwrap();

        let norms: Vec<f64> = m
            .statements()
            .iter()
            .map(|s| params.factor_norm(s).unwrap())
            .collect();
        let intercepts: Vec<f64> = m
            .statements()
            .iter()
            .map(|s| params.statement_intercepts[s])
            .collect();
        let mut dominated = 0;
        for bridging in 0..3 {
            for divisive in 3..6 {
                if norms[divisive] > norms[bridging] {
                    dominated += 1;
                }
                assert!(
                    intercepts[bridging] > intercepts[divisive],
                    "bridging intercept {} should exceed divisive {}",
                    intercepts[bridging],
                    intercepts[divisive]
                );
            }
        }
        assert!(dominated >= 8, "only {dominated}/9 pairs separated by factor norm");
    }

    #[test]
    fn selection_takes_the_union_of_both_criteria() {
        // Four participants in two groups; s_amin is agreed by all, s_dist
        // splits the groups, s_none splits them the other way.
        let m = matrix(
            &["p1", "p2", "p3", "p4"],
            &["s_amin", "s_dist", "s_none"],
            &[
                1, 1, 0, //
                1, 0, 1, //
                1, 1, 0, //
                1, 0, 1,
            ],
        );
        let partition = GroupPartition {
            groups: vec![group("g1", &["p1", "p2"]), group("g2", &["p3", "p4"])],
        };
        let params = hand_params(&[
            ("s_amin", 4.0, 0.0),
            ("s_dist", 0.0, 2.0),
            ("s_none", 5.0, -3.0),
        ]);
        let set = select_bridging(&m, &partition, &params, &BridgingConfig::default()).unwrap();
        assert_eq!(
            set.selected,
            vec![StatementId::new("s_amin"), StatementId::new("s_dist")]
        );
        let diag: BTreeMap<&str, &StatementDiagnostics> = set
            .diagnostics
            .iter()
            .map(|d| (d.statement_id.as_str(), d))
            .collect();
        assert_eq!(diag["s_amin"].reason, Some(SelectionReason::Amin));
        assert_eq!(diag["s_dist"].reason, Some(SelectionReason::Distance));
        assert_eq!(diag["s_none"].reason, None);
        assert_eq!(diag["s_amin"].a_min, 1.0);
    }

    #[test]
    fn selection_reports_both_when_both_criteria_hold() {
        let m = matrix(&["p1", "p2"], &["s1"], &[1, 1]);
        let partition = GroupPartition {
            groups: vec![group("g1", &["p1"]), group("g2", &["p2"])],
        };
        let params = hand_params(&[("s1", 0.0, 2.0)]);
        let set = select_bridging(&m, &partition, &params, &BridgingConfig::default()).unwrap();
        assert_eq!(set.diagnostics[0].reason, Some(SelectionReason::Both));
        assert!(set.is_selected(&"s1".into()));
    }

    #[test]
    fn stated_only_ignores_inferred_cells() {
        let values = vec![1, 1, 0, 1];
        let provenance = vec![
            Provenance::Stated,
            Provenance::Inferred,
            Provenance::Stated,
            Provenance::Inferred,
        ];
        let m = CompleteVoteMatrix::new(
            vec!["p1".into(), "p2".into()],
            vec!["s1".into(), "s2".into()],
            values,
            provenance,
        )
        .unwrap();
        let partition = GroupPartition {
            groups: vec![group("g1", &["p1", "p2"])],
        };
        let params = hand_params(&[("s1", 9.0, -9.0), ("s2", 9.0, -9.0)]);
        let cfg = BridgingConfig {
            stated_only: true,
            amin_threshold: 0.6,
            ..BridgingConfig::default()
        };
        let set = select_bridging(&m, &partition, &params, &cfg).unwrap();
        let diag: BTreeMap<&str, &StatementDiagnostics> = set
            .diagnostics
            .iter()
            .map(|d| (d.statement_id.as_str(), d))
            .collect();
        // Stated votes on s1: p1 agree, p2 disagree → 0.5. On s2 nobody has
        // a stated vote → 0.
        assert_eq!(diag["s1"].a_min, 0.5);
        assert_eq!(diag["s2"].a_min, 0.0);
        assert!(set.selected.is_empty());
    }
}
