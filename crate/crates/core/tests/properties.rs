//! Randomized invariant checks across the tally, bridging, and completion
//! APIs, with independent recomputation wherever a metric has a simpler
//! direct definition.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use bridgekit::bridging::{select_bridging, BridgingConfig};
use bridgekit::completion::{complete_votes, CompletionConfig};
use bridgekit::model::{
    AgreeVote, DialogueBundle, Group, GroupPartition, LikertBallot, Participant, Provenance,
    RankBallot, SparseVoteMatrix, Statement, StatementId, VoteEntry,
};
use bridgekit::tally::{
    dowdall_equal_power_exact, dowdall_exact, final_max_min_exact, irv_ranks_equal_power,
    likert_agreement_exact,
};

fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A dense final-vote fixture: every participant rates and ranks every
/// statement, so every group is represented everywhere.
#[derive(Clone, Debug)]
struct Fixture {
    partition: GroupPartition,
    statements: Vec<StatementId>,
    likert: Vec<LikertBallot>,
    rankings: Vec<RankBallot>,
}

impl Fixture {
    fn participants(&self) -> Vec<(String, usize)> {
        self.partition
            .groups
            .iter()
            .enumerate()
            .flat_map(|(gi, g)| g.members.iter().map(move |m| (m.to_string(), gi)))
            .collect()
    }
}

fn permutation_of(n: usize, keys: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (keys[i], i));
    order
}

fn fixture() -> impl Strategy<Value = Fixture> {
    let shape = (2usize..=3, proptest::collection::vec(1usize..=4, 3), 2usize..=4);
    shape.prop_flat_map(|(n_groups, sizes, n_statements)| {
        let sizes: Vec<usize> = sizes.into_iter().take(n_groups).collect();
        let total: usize = sizes.iter().sum();
        let values = proptest::collection::vec(1u8..=5, total * n_statements);
        let rank_keys = proptest::collection::vec(any::<u64>(), total * n_statements);
        (Just(sizes), Just(n_statements), values, rank_keys).prop_map(
            |(sizes, n_statements, values, rank_keys)| {
                let statements: Vec<StatementId> = (0..n_statements)
                    .map(|i| format!("s{i}").as_str().into())
                    .collect();
                let mut groups = Vec::new();
                let mut likert = Vec::new();
                let mut rankings = Vec::new();
                let mut p = 0usize;
                for (gi, &size) in sizes.iter().enumerate() {
                    let mut members = Vec::new();
                    for _ in 0..size {
                        let pid = format!("g{gi}p{p}");
                        members.push(pid.as_str().into());
                        for (si, statement) in statements.iter().enumerate() {
                            likert.push(LikertBallot {
                                participant_id: pid.as_str().into(),
                                statement_id: statement.clone(),
                                value: values[p * n_statements + si],
                            });
                        }
                        let keys = &rank_keys[p * n_statements..(p + 1) * n_statements];
                        let order = permutation_of(n_statements, keys);
                        rankings.push(RankBallot {
                            participant_id: pid.as_str().into(),
                            ranking: order.iter().map(|&i| statements[i].clone()).collect(),
                        });
                        p += 1;
                    }
                    groups.push(Group {
                        id: format!("g{gi}").as_str().into(),
                        name: format!("Group {gi}"),
                        members,
                    });
                }
                Fixture {
                    partition: GroupPartition { groups },
                    statements,
                    likert,
                    rankings,
                }
            },
        )
    })
}

/// The fixture with every ballot of one group replicated `k` times under
/// fresh participant ids in the same group.
fn replicate_group(fixture: &Fixture, group_index: usize, k: usize) -> Fixture {
    let mut replicated = fixture.clone();
    let group = &mut replicated.partition.groups[group_index];
    let original_members = group.members.clone();
    for copy in 1..k {
        for member in &original_members {
            let clone_id = format!("{member}~copy{copy}");
            group.members.push(clone_id.as_str().into());
            for ballot in fixture.likert.iter().filter(|b| b.participant_id == *member) {
                replicated.likert.push(LikertBallot {
                    participant_id: clone_id.as_str().into(),
                    statement_id: ballot.statement_id.clone(),
                    value: ballot.value,
                });
            }
            let source = fixture
                .rankings
                .iter()
                .find(|b| b.participant_id == *member)
                .expect("every participant ranks");
            replicated.rankings.push(RankBallot {
                participant_id: clone_id.as_str().into(),
                ranking: source.ranking.clone(),
            });
        }
    }
    replicated
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Replicating one group's ballots never moves any equal-power metric.
    #[test]
    fn replication_leaves_equal_power_metrics_unchanged(
        fx in fixture(),
        group_index in 0usize..3,
        k in prop::sample::select(vec![2usize, 3, 5]),
    ) {
        let group_index = group_index % fx.partition.groups.len();
        let replicated = replicate_group(&fx, group_index, k);
        for statement in &fx.statements {
            let before = final_max_min_exact(&fx.likert, statement, &fx.partition).unwrap();
            let after =
                final_max_min_exact(&replicated.likert, statement, &replicated.partition).unwrap();
            prop_assert_eq!(&before, &after);

            let before =
                dowdall_equal_power_exact(&fx.rankings, statement, &fx.partition).unwrap();
            let after = dowdall_equal_power_exact(
                &replicated.rankings,
                statement,
                &replicated.partition,
            )
            .unwrap();
            prop_assert_eq!(&before, &after);
        }
        let before = irv_ranks_equal_power(&fx.rankings, &fx.statements, &fx.partition).unwrap();
        let after = irv_ranks_equal_power(
            &replicated.rankings,
            &replicated.statements,
            &replicated.partition,
        )
        .unwrap();
        prop_assert_eq!(before.ranks, after.ranks);
    }

    /// Dowdall scores live in [1/|C|, 1] and someone's score is 1 only when
    /// every ballot puts that statement first.
    #[test]
    fn dowdall_respects_positional_bounds(fx in fixture()) {
        let count = fx.statements.len();
        for statement in &fx.statements {
            let score = dowdall_exact(&fx.rankings, statement).unwrap();
            prop_assert!(score >= ratio(1, count));
            prop_assert!(score <= ratio(1, 1));
            if score == ratio(1, 1) {
                prop_assert!(fx
                    .rankings
                    .iter()
                    .all(|b| b.ranking.first() == Some(statement)));
            }
        }
    }

    /// IRV assigns each statement a distinct rank from 1 to |C|.
    #[test]
    fn irv_ranks_form_a_permutation(fx in fixture()) {
        let outcome =
            irv_ranks_equal_power(&fx.rankings, &fx.statements, &fx.partition).unwrap();
        let mut ranks: Vec<usize> = outcome.ranks.values().copied().collect();
        ranks.sort_unstable();
        let expected: Vec<usize> = (1..=fx.statements.len()).collect();
        prop_assert_eq!(ranks, expected);
        prop_assert_eq!(outcome.rounds.len(), fx.statements.len() - 1);
    }

    /// Equal-power Dowdall equals the plain mean of single-group Dowdall
    /// scores computed independently per group.
    #[test]
    fn dowdall_equal_power_is_the_group_mean(fx in fixture()) {
        for statement in &fx.statements {
            let combined =
                dowdall_equal_power_exact(&fx.rankings, statement, &fx.partition).unwrap();
            let mut sum = BigRational::new(BigInt::from(0), BigInt::from(1));
            for group in &fx.partition.groups {
                let ballots: Vec<RankBallot> = fx
                    .rankings
                    .iter()
                    .filter(|b| group.members.contains(&b.participant_id))
                    .cloned()
                    .collect();
                sum += dowdall_exact(&ballots, statement).unwrap();
            }
            let mean = sum / BigRational::from_integer(BigInt::from(fx.partition.groups.len()));
            prop_assert_eq!(combined, mean);
        }
    }

    /// The agreement fraction matches a direct count of 4s and 5s among the
    /// group's ballots on the statement.
    #[test]
    fn likert_agreement_matches_direct_count(fx in fixture()) {
        for statement in &fx.statements {
            for group in &fx.partition.groups {
                let computed =
                    likert_agreement_exact(&fx.likert, statement, group).unwrap();
                let relevant: Vec<&LikertBallot> = fx
                    .likert
                    .iter()
                    .filter(|b| {
                        b.statement_id == *statement
                            && group.members.contains(&b.participant_id)
                    })
                    .collect();
                let agree = relevant.iter().filter(|b| b.value >= 4).count();
                prop_assert_eq!(computed, ratio(agree, relevant.len()));
            }
        }
        for statement in &fx.statements {
            let min = final_max_min_exact(&fx.likert, statement, &fx.partition).unwrap();
            let per_group = fx
                .partition
                .groups
                .iter()
                .map(|g| likert_agreement_exact(&fx.likert, statement, g).unwrap())
                .min()
                .unwrap();
            prop_assert_eq!(min, per_group);
        }
    }
}

/// A dense agreement-vote fixture for selection and completion properties.
#[derive(Clone, Debug)]
struct VoteFixture {
    bundle: DialogueBundle,
}

fn vote_fixture() -> impl Strategy<Value = VoteFixture> {
    let shape = (2usize..=3, proptest::collection::vec(2usize..=3, 3), 3usize..=5);
    shape.prop_flat_map(|(n_groups, sizes, n_statements)| {
        let sizes: Vec<usize> = sizes.into_iter().take(n_groups).collect();
        let total: usize = sizes.iter().sum();
        let votes = proptest::collection::vec(any::<bool>(), total * n_statements);
        (Just(sizes), Just(n_statements), votes).prop_map(|(sizes, n_statements, votes)| {
            let statements: Vec<Statement> = (0..n_statements)
                .map(|i| Statement {
                    id: format!("s{i}").as_str().into(),
                    prompt_id: "q1".to_owned(),
                    text: format!("Statement number {i}."),
                    language: "en".to_owned(),
                    author_id: None,
                })
                .collect();
            let mut groups = Vec::new();
            let mut participants = Vec::new();
            let mut entries = Vec::new();
            let mut p = 0usize;
            for (gi, &size) in sizes.iter().enumerate() {
                let mut members = Vec::new();
                for _ in 0..size {
                    let pid = format!("g{gi}p{p}");
                    members.push(pid.as_str().into());
                    participants.push(Participant {
                        id: pid.as_str().into(),
                        group_id: format!("g{gi}").as_str().into(),
                        demographics: BTreeMap::new(),
                    });
                    for (si, statement) in statements.iter().enumerate() {
                        entries.push(VoteEntry {
                            participant_id: pid.as_str().into(),
                            statement_id: statement.id.clone(),
                            vote: if votes[p * n_statements + si] {
                                AgreeVote::Agree
                            } else {
                                AgreeVote::Disagree
                            },
                        });
                    }
                    p += 1;
                }
                groups.push(Group {
                    id: format!("g{gi}").as_str().into(),
                    name: format!("Group {gi}"),
                    members,
                });
            }
            VoteFixture {
                bundle: DialogueBundle {
                    participants,
                    partition: GroupPartition { groups },
                    statements,
                    votes: SparseVoteMatrix { entries },
                    final_votes: None,
                },
            }
        })
    })
}

fn quick_bridging_config() -> BridgingConfig {
    BridgingConfig {
        epochs: 30,
        seed: 5,
        ..BridgingConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// A fully observed matrix passes through completion unchanged, every
    /// cell marked as stated.
    #[test]
    fn dense_votes_pass_through_completion(fx in vote_fixture()) {
        let cfg = CompletionConfig { epochs: 5, ..CompletionConfig::default() };
        let complete = complete_votes(&fx.bundle.votes, &fx.bundle, &cfg).unwrap();
        for entry in &fx.bundle.votes.entries {
            let value = complete.value(&entry.participant_id, &entry.statement_id).unwrap();
            prop_assert_eq!(value, u8::from(entry.vote == AgreeVote::Agree));
            let provenance = complete
                .provenance(&entry.participant_id, &entry.statement_id)
                .unwrap();
            prop_assert_eq!(provenance, Provenance::Stated);
        }
    }

    /// The bridging set is exactly the union of the two criteria's sets, on
    /// the selection's own diagnostics.
    #[test]
    fn selection_is_the_union_of_both_criteria(fx in vote_fixture()) {
        let cfg = quick_bridging_config();
        let completion_cfg = CompletionConfig { epochs: 5, ..CompletionConfig::default() };
        let complete = complete_votes(&fx.bundle.votes, &fx.bundle, &completion_cfg).unwrap();
        let observations =
            bridgekit::bridging::VoteObservations::from_complete(&complete);
        let params =
            bridgekit::bridging::fit_latent_factor_model(&observations, &cfg).unwrap();
        let set =
            select_bridging(&complete, fx.bundle.group_partition(), &params, &cfg).unwrap();
        for diag in &set.diagnostics {
            let by_amin = diag.a_min >= cfg.amin_threshold;
            let by_distance = diag.distance <= cfg.distance_threshold;
            prop_assert_eq!(set.is_selected(&diag.statement_id), by_amin || by_distance);
            prop_assert_eq!(diag.reason.is_some(), by_amin || by_distance);
        }
    }

    /// Loosening a threshold never removes a selected statement; tightening
    /// never adds one.
    #[test]
    fn thresholds_act_monotonically(
        fx in vote_fixture(),
        amin_low in 0.3f64..0.6,
        amin_high in 0.6f64..0.9,
        dist_low in 0.5f64..1.5,
        dist_high in 1.5f64..3.0,
    ) {
        let completion_cfg = CompletionConfig { epochs: 5, ..CompletionConfig::default() };
        let complete = complete_votes(&fx.bundle.votes, &fx.bundle, &completion_cfg).unwrap();
        let base = quick_bridging_config();
        let observations = bridgekit::bridging::VoteObservations::from_complete(&complete);
        let params = bridgekit::bridging::fit_latent_factor_model(&observations, &base).unwrap();
        let select = |amin: f64, dist: f64| {
            let cfg = BridgingConfig {
                amin_threshold: amin,
                distance_threshold: dist,
                ..base.clone()
            };
            select_bridging(&complete, fx.bundle.group_partition(), &params, &cfg)
                .unwrap()
                .selected
        };
        let loose_amin = select(amin_low, dist_low);
        let tight_amin = select(amin_high, dist_low);
        prop_assert!(tight_amin.iter().all(|s| loose_amin.contains(s)));

        let narrow_dist = select(amin_high, dist_low);
        let wide_dist = select(amin_high, dist_high);
        prop_assert!(narrow_dist.iter().all(|s| wide_dist.contains(s)));
    }
}
