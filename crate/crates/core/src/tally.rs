//! Equal-power tallies of final votes.
//!
//! Final votes rate the collective statements on a five-point Likert scale
//! and rank them in order of preference. Three metrics score each statement,
//! all designed so groups contribute equally regardless of size:
//!
//! * [`final_max_min`]: the minimum over groups of the fraction of the
//!   group's raters choosing 4 or 5.
//! * [`dowdall_equal_power`]: the unweighted mean over groups of the group's
//!   Dowdall score, where a group's score averages 1/k points per ballot for
//!   a statement ranked at position k.
//! * [`irv_ranks_equal_power`]: instant-runoff ranks where each round
//!   eliminates the statement with the smallest group-averaged first-place
//!   share.
//!
//! All intermediate arithmetic uses exact rationals, so replicating every
//! ballot of one group any number of times leaves every output bit-for-bit
//! unchanged. The `*_exact` variants expose the rational values directly.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{
    FinalVoteRecord, Group, GroupPartition, LikertBallot, ParticipantId, RankBallot, StatementId,
};

/// Why a tally could not be computed.
#[derive(Debug, thiserror::Error)]
pub enum TallyError {
    #[error("participant {0} does not belong to any group in the partition")]
    UnknownParticipant(ParticipantId),
    #[error("statement {0} is not covered by the ballots")]
    UnknownStatement(StatementId),
    #[error("statement {0} appears more than once in the statement list")]
    DuplicateStatement(StatementId),
    #[error("no ballots were cast")]
    NoBallots,
    #[error("group {group} cast no ratings on statement {statement}")]
    NoGroupRatings {
        group: GroupId,
        statement: StatementId,
    },
    #[error("group {0} cast no rank ballots")]
    NoGroupBallots(GroupId),
    #[error("ballot by participant {participant} is not a complete ranking: {detail}")]
    IncompleteBallot {
        participant: ParticipantId,
        detail: String,
    },
    #[error("the partition declares no groups")]
    EmptyPartition,
    #[error("no statements to tally")]
    NoStatements,
    #[error("rating {value} by participant {participant} on statement {statement} is outside 1..=5")]
    RatingOutOfRange {
        participant: ParticipantId,
        statement: StatementId,
        value: u8,
    },
}

use crate::model::GroupId;

fn ratio(numer: usize, denom: usize) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().expect("tally rationals fit in f64")
}

/// Fraction of `group` members rating `statement` 4 or 5, among members who
/// rated it at all.
pub fn likert_agreement(
    ballots: &[LikertBallot],
    statement: &StatementId,
    group: &Group,
) -> Result<f64, TallyError> {
    likert_agreement_exact(ballots, statement, group).map(|v| to_f64(&v))
}

/// Exact-rational form of [`likert_agreement`].
pub fn likert_agreement_exact(
    ballots: &[LikertBallot],
    statement: &StatementId,
    group: &Group,
) -> Result<BigRational, TallyError> {
    let members: BTreeSet<&ParticipantId> = group.members.iter().collect();
    let mut total = 0usize;
    let mut agree = 0usize;
    for b in ballots {
        if &b.statement_id != statement || !members.contains(&b.participant_id) {
            continue;
        }
        if !(1..=5).contains(&b.value) {
            return Err(TallyError::RatingOutOfRange {
                participant: b.participant_id.clone(),
                statement: b.statement_id.clone(),
                value: b.value,
            });
        }
        total += 1;
        if b.value >= 4 {
            agree += 1;
        }
    }
    if total == 0 {
        return Err(TallyError::NoGroupRatings {
            group: group.id.clone(),
            statement: statement.clone(),
        });
    }
    Ok(ratio(agree, total))
}

/// Minimum Likert agreement across all groups of the partition.
pub fn final_max_min(
    ballots: &[LikertBallot],
    statement: &StatementId,
    partition: &GroupPartition,
) -> Result<f64, TallyError> {
    final_max_min_exact(ballots, statement, partition).map(|v| to_f64(&v))
}

/// Exact-rational form of [`final_max_min`].
pub fn final_max_min_exact(
    ballots: &[LikertBallot],
    statement: &StatementId,
    partition: &GroupPartition,
) -> Result<BigRational, TallyError> {
    if partition.groups.is_empty() {
        return Err(TallyError::EmptyPartition);
    }
    let mut min: Option<BigRational> = None;
    for group in &partition.groups {
        let alpha = likert_agreement_exact(ballots, statement, group)?;
        min = Some(match min {
            Some(current) if current <= alpha => current,
            _ => alpha,
        });
    }
    Ok(min.expect("at least one group"))
}

/// Checks that a ballot ranks exactly the statements in `universe`, each
/// once.
fn check_complete(
    ballot: &RankBallot,
    universe: &BTreeSet<&StatementId>,
) -> Result<(), TallyError> {
    let seen: BTreeSet<&StatementId> = ballot.ranking.iter().collect();
    if seen.len() != ballot.ranking.len() {
        return Err(TallyError::IncompleteBallot {
            participant: ballot.participant_id.clone(),
            detail: "a statement appears more than once".to_owned(),
        });
    }
    if &seen != universe {
        return Err(TallyError::IncompleteBallot {
            participant: ballot.participant_id.clone(),
            detail: format!(
                "ranks {} statements, expected the full set of {}",
                seen.len(),
                universe.len()
            ),
        });
    }
    Ok(())
}

/// Mean of 1/position over the given ballots.
fn dowdall_over(ballots: &[&RankBallot], statement: &StatementId) -> BigRational {
    let mut sum = BigRational::zero();
    for b in ballots {
        let pos = b
            .ranking
            .iter()
            .position(|s| s == statement)
            .expect("complete ballots contain every statement");
        sum += ratio(1, pos + 1);
    }
    sum / BigRational::from_integer(BigInt::from(ballots.len()))
}

/// Dowdall score of `statement` over one population of ballots: the mean of
/// 1/k points where k is the statement's position on each ballot.
///
/// Ballots must all rank the same statement set completely.
pub fn dowdall(ballots: &[RankBallot], statement: &StatementId) -> Result<f64, TallyError> {
    dowdall_exact(ballots, statement).map(|v| to_f64(&v))
}

/// Exact-rational form of [`dowdall`].
pub fn dowdall_exact(
    ballots: &[RankBallot],
    statement: &StatementId,
) -> Result<BigRational, TallyError> {
    let first = ballots.first().ok_or(TallyError::NoBallots)?;
    let universe: BTreeSet<&StatementId> = first.ranking.iter().collect();
    for b in ballots {
        check_complete(b, &universe)?;
    }
    if !universe.contains(statement) {
        return Err(TallyError::UnknownStatement(statement.clone()));
    }
    let refs: Vec<&RankBallot> = ballots.iter().collect();
    Ok(dowdall_over(&refs, statement))
}

/// Splits rank ballots by the caster's group, in partition order. Every
/// ballot must come from a partition member and every group must have at
/// least one ballot.
fn split_by_group<'a>(
    ballots: &'a [RankBallot],
    partition: &'a GroupPartition,
) -> Result<Vec<(&'a Group, Vec<&'a RankBallot>)>, TallyError> {
    if partition.groups.is_empty() {
        return Err(TallyError::EmptyPartition);
    }
    let membership = partition.membership();
    let mut per_group: BTreeMap<&GroupId, Vec<&RankBallot>> = BTreeMap::new();
    for b in ballots {
        let gid = membership
            .get(&b.participant_id)
            .ok_or_else(|| TallyError::UnknownParticipant(b.participant_id.clone()))?;
        per_group.entry(gid).or_default().push(b);
    }
    partition
        .groups
        .iter()
        .map(|group| {
            let ballots = per_group.remove(&group.id).unwrap_or_default();
            if ballots.is_empty() {
                Err(TallyError::NoGroupBallots(group.id.clone()))
            } else {
                Ok((group, ballots))
            }
        })
        .collect()
}

/// Unweighted mean over groups of the per-group Dowdall score, so each group
/// carries the same weight regardless of how many ballots it cast.
pub fn dowdall_equal_power(
    ballots: &[RankBallot],
    statement: &StatementId,
    partition: &GroupPartition,
) -> Result<f64, TallyError> {
    dowdall_equal_power_exact(ballots, statement, partition).map(|v| to_f64(&v))
}

/// Exact-rational form of [`dowdall_equal_power`].
pub fn dowdall_equal_power_exact(
    ballots: &[RankBallot],
    statement: &StatementId,
    partition: &GroupPartition,
) -> Result<BigRational, TallyError> {
    let first = ballots.first().ok_or(TallyError::NoBallots)?;
    let universe: BTreeSet<&StatementId> = first.ranking.iter().collect();
    for b in ballots {
        check_complete(b, &universe)?;
    }
    if !universe.contains(statement) {
        return Err(TallyError::UnknownStatement(statement.clone()));
    }
    let groups = split_by_group(ballots, partition)?;
    let sum: BigRational = groups
        .iter()
        .map(|(_, ballots)| dowdall_over(ballots, statement))
        .sum();
    Ok(sum / BigRational::from_integer(BigInt::from(groups.len())))
}

/// Group-averaged first-place shares over a restricted statement set.
///
/// For each group, a statement's share is the fraction of the group's
/// ballots placing it first among `remaining`; the result averages those
/// shares over groups with equal weight.
pub fn first_place_shares_exact(
    ballots: &[RankBallot],
    remaining: &[StatementId],
    partition: &GroupPartition,
) -> Result<BTreeMap<StatementId, BigRational>, TallyError> {
    if remaining.is_empty() {
        return Err(TallyError::NoStatements);
    }
    let groups = split_by_group(ballots, partition)?;
    Ok(first_place_shares_over(&groups, remaining))
}

fn first_place_shares_over(
    groups: &[(&Group, Vec<&RankBallot>)],
    remaining: &[StatementId],
) -> BTreeMap<StatementId, BigRational> {
    let remaining_set: BTreeSet<&StatementId> = remaining.iter().collect();
    let mut shares: BTreeMap<StatementId, BigRational> = remaining
        .iter()
        .map(|s| (s.clone(), BigRational::zero()))
        .collect();
    for (_, ballots) in groups {
        let mut counts: BTreeMap<&StatementId, usize> = BTreeMap::new();
        for b in ballots {
            let top = b
                .ranking
                .iter()
                .find(|s| remaining_set.contains(s))
                .expect("complete ballots rank every remaining statement");
            *counts.entry(top).or_insert(0) += 1;
        }
        for (s, count) in counts {
            *shares.get_mut(s).expect("share entry") += ratio(count, ballots.len());
        }
    }
    let group_count = BigRational::from_integer(BigInt::from(groups.len()));
    for share in shares.values_mut() {
        *share /= group_count.clone();
    }
    shares
}

/// One instant-runoff elimination round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrvRound {
    /// 1-based round number.
    pub round: usize,
    /// Statements still standing at the start of the round.
    pub remaining: Vec<StatementId>,
    /// Group-averaged first-place share of each remaining statement.
    pub first_place_shares: BTreeMap<StatementId, f64>,
    pub eliminated: StatementId,
    /// True when the minimum share was tied and the tie-break applied.
    pub tie: bool,
    /// The statements tied for elimination, when `tie` is set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tie_between: Vec<StatementId>,
}

/// Instant-runoff result: a rank per statement plus the elimination trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrvOutcome {
    /// Rank 1 is the last statement standing.
    pub ranks: BTreeMap<StatementId, usize>,
    pub rounds: Vec<IrvRound>,
}

/// Ranks statements by iterated elimination of the smallest group-averaged
/// first-place share.
///
/// A statement eliminated in round n receives rank |C| − n + 1; the survivor
/// receives rank 1. Ties for elimination go to the statement with the lower
/// equal-power Dowdall score on the full ballots, then to the
/// lexicographically smaller id, and are flagged in the trace.
pub fn irv_ranks_equal_power(
    ballots: &[RankBallot],
    statements: &[StatementId],
    partition: &GroupPartition,
) -> Result<IrvOutcome, TallyError> {
    if statements.is_empty() {
        return Err(TallyError::NoStatements);
    }
    let universe: BTreeSet<&StatementId> = statements.iter().collect();
    if universe.len() != statements.len() {
        let dup = statements
            .iter()
            .find(|s| statements.iter().filter(|t| t == s).count() > 1)
            .expect("duplicate exists");
        return Err(TallyError::DuplicateStatement(dup.clone()));
    }
    if ballots.is_empty() {
        return Err(TallyError::NoBallots);
    }
    for b in ballots {
        check_complete(b, &universe)?;
    }
    let groups = split_by_group(ballots, partition)?;

    let dowdall_ep: BTreeMap<&StatementId, BigRational> = statements
        .iter()
        .map(|s| {
            let sum: BigRational = groups.iter().map(|(_, bs)| dowdall_over(bs, s)).sum();
            let mean = sum / BigRational::from_integer(BigInt::from(groups.len()));
            (s, mean)
        })
        .collect();

    let total = statements.len();
    let mut remaining: Vec<StatementId> = statements.to_vec();
    let mut ranks = BTreeMap::new();
    let mut rounds = Vec::new();
    for round in 1..total {
        let shares = first_place_shares_over(&groups, &remaining);
        let min_share = shares.values().min().expect("remaining is non-empty");
        let mut tied: Vec<&StatementId> = shares
            .iter()
            .filter(|(_, v)| *v == min_share)
            .map(|(s, _)| s)
            .collect();
        tied.sort();
        let eliminated = tied
            .iter()
            .min_by(|a, b| {
                let da = &dowdall_ep[*a];
                let db = &dowdall_ep[*b];
                da.cmp(db).then_with(|| a.cmp(b))
            })
            .copied()
            .expect("at least one tied statement")
            .clone();
        rounds.push(IrvRound {
            round,
            remaining: remaining.clone(),
            first_place_shares: shares.iter().map(|(s, v)| (s.clone(), to_f64(v))).collect(),
            eliminated: eliminated.clone(),
            tie: tied.len() > 1,
            tie_between: if tied.len() > 1 {
                tied.into_iter().cloned().collect()
            } else {
                Vec::new()
            },
        });
        ranks.insert(eliminated.clone(), total - round + 1);
        remaining.retain(|s| s != &eliminated);
    }
    let survivor = remaining
        .first()
        .expect("one statement survives all rounds")
        .clone();
    ranks.insert(survivor, 1);
    Ok(IrvOutcome { ranks, rounds })
}

/// All three equal-power metrics for one statement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementTally {
    pub statement_id: StatementId,
    /// Minimum over groups of Likert agreement.
    pub final_max_min: f64,
    /// Likert agreement per group.
    pub group_agreement: BTreeMap<GroupId, f64>,
    pub dowdall_equal_power: f64,
    pub irv_rank: usize,
}

/// The full final-vote tally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TallyResult {
    /// Per-statement metrics, in the order the statements were given.
    pub statements: Vec<StatementTally>,
    /// Statements in the order they were eliminated, survivor last.
    pub elimination_order: Vec<StatementId>,
    pub rounds: Vec<IrvRound>,
    /// Partition size of each group.
    pub group_sizes: BTreeMap<GroupId, usize>,
    /// Rank ballots cast per group.
    pub ballot_counts: BTreeMap<GroupId, usize>,
}

/// Scores every statement with all three equal-power metrics.
pub fn tally(
    final_votes: &FinalVoteRecord,
    statements: &[StatementId],
    partition: &GroupPartition,
) -> Result<TallyResult, TallyError> {
    let irv = irv_ranks_equal_power(&final_votes.rankings, statements, partition)?;
    let mut tallies = Vec::with_capacity(statements.len());
    for statement in statements {
        let mut group_agreement = BTreeMap::new();
        for group in &partition.groups {
            let alpha = likert_agreement(&final_votes.likert, statement, group)?;
            group_agreement.insert(group.id.clone(), alpha);
        }
        tallies.push(StatementTally {
            statement_id: statement.clone(),
            final_max_min: final_max_min(&final_votes.likert, statement, partition)?,
            group_agreement,
            dowdall_equal_power: dowdall_equal_power(
                &final_votes.rankings,
                statement,
                partition,
            )?,
            irv_rank: irv.ranks[statement],
        });
    }
    let mut elimination_order: Vec<StatementId> =
        irv.rounds.iter().map(|r| r.eliminated.clone()).collect();
    if let Some(survivor) = statements
        .iter()
        .find(|s| !elimination_order.contains(s))
        .cloned()
    {
        elimination_order.push(survivor);
    }
    let mut ballot_counts: BTreeMap<GroupId, usize> = BTreeMap::new();
    let membership = partition.membership();
    for b in &final_votes.rankings {
        let gid = membership
            .get(&b.participant_id)
            .ok_or_else(|| TallyError::UnknownParticipant(b.participant_id.clone()))?;
        *ballot_counts.entry(gid.clone()).or_insert(0) += 1;
    }
    Ok(TallyResult {
        statements: tallies,
        elimination_order,
        rounds: irv.rounds,
        group_sizes: partition
            .sizes()
            .into_iter()
            .collect(),
        ballot_counts,
    })
}
