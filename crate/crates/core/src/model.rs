//! Domain types and bundle I/O for dialogue data.
//!
//! A dialogue bundle is a directory of JSON files: `participants.json`,
//! `groups.json`, `statements.json`, `votes.json`, and optionally
//! `final_votes.json`. [`read_bundle`] parses, [`validate_bundle`] checks
//! referential integrity without failing, and [`load_bundle`] does both and
//! refuses invalid data. [`save_bundle`] writes the same files back in
//! canonical form, so a load/save cycle is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canonical;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(id: &str) -> Self {
                Self(id.to_owned())
            }
        }
    };
}

id_type!(
    /// Opaque participant identifier, unique within a bundle.
    ParticipantId
);
id_type!(
    /// Opaque statement identifier, unique within a bundle.
    StatementId
);
id_type!(
    /// Opaque group identifier, unique within a bundle.
    GroupId
);

/// One dialogue participant and their group assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub group_id: GroupId,
    /// Free-form demographic attributes, e.g. `"age_bracket": "35-44"`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub demographics: BTreeMap<String, String>,
}

/// One stipulated group: an identity cohort whose agreement is tracked as a
/// unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub id: GroupId,
    pub name: String,
    pub members: Vec<ParticipantId>,
}

/// The stipulated partition of participants into groups.
///
/// Groups keep their declaration order; metrics that average over groups
/// iterate in this order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub groups: Vec<Group>,
}

impl GroupPartition {
    /// Member counts per group, in declaration order.
    pub fn sizes(&self) -> Vec<(GroupId, usize)> {
        self.groups
            .iter()
            .map(|g| (g.id.clone(), g.members.len()))
            .collect()
    }

    /// Maps every member to its group id.
    pub fn membership(&self) -> BTreeMap<ParticipantId, GroupId> {
        let mut map = BTreeMap::new();
        for group in &self.groups {
            for member in &group.members {
                map.insert(member.clone(), group.id.clone());
            }
        }
        map
    }

    pub fn group(&self, id: &GroupId) -> Option<&Group> {
        self.groups.iter().find(|g| &g.id == id)
    }
}

/// A candidate statement collected during the dialogue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: StatementId,
    /// The prompt the statement responds to.
    pub prompt_id: String,
    pub text: String,
    /// IETF language tag, e.g. `"en"` or `"he"`.
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_id: Option<ParticipantId>,
}

/// An agree/disagree stance on one statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreeVote {
    Agree,
    Disagree,
}

impl AgreeVote {
    /// Numeric encoding used by the completion and factor models: agree is 1,
    /// disagree is 0.
    pub fn as_unit(self) -> u8 {
        match self {
            AgreeVote::Agree => 1,
            AgreeVote::Disagree => 0,
        }
    }
}

/// One observed vote.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteEntry {
    pub participant_id: ParticipantId,
    pub statement_id: StatementId,
    pub vote: AgreeVote,
}

/// The sparse matrix of observed votes. Most participants see only a subset
/// of statements, so most cells are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseVoteMatrix {
    pub entries: Vec<VoteEntry>,
}

impl SparseVoteMatrix {
    /// Entries sorted by (participant id, statement id).
    ///
    /// Training code iterates this canonical order so results do not depend
    /// on the order votes appear in the file.
    pub fn canonical_entries(&self) -> Vec<&VoteEntry> {
        let mut entries: Vec<&VoteEntry> = self.entries.iter().collect();
        entries.sort_by(|a, b| {
            (&a.participant_id, &a.statement_id).cmp(&(&b.participant_id, &b.statement_id))
        });
        entries
    }

    /// Set of (participant, statement) pairs with an observed vote.
    pub fn observed_pairs(&self) -> BTreeSet<(&ParticipantId, &StatementId)> {
        self.entries
            .iter()
            .map(|e| (&e.participant_id, &e.statement_id))
            .collect()
    }
}

/// Whether a cell of the completed matrix was observed or model-inferred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Stated,
    Inferred,
}

/// A dense agree/disagree matrix over all participants and statements.
///
/// Values are 1 (agree) or 0 (disagree); every cell carries a [`Provenance`]
/// flag. Rows follow the participant order and columns the statement order
/// given at construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CompleteVotesFile", into = "CompleteVotesFile")]
pub struct CompleteVoteMatrix {
    participants: Vec<ParticipantId>,
    statements: Vec<StatementId>,
    values: Vec<u8>,
    provenance: Vec<Provenance>,
    participant_index: BTreeMap<ParticipantId, usize>,
    statement_index: BTreeMap<StatementId, usize>,
}

impl CompleteVoteMatrix {
    /// Builds a matrix from row-major `values` and `provenance`, both of
    /// length `participants.len() * statements.len()`.
    pub fn new(
        participants: Vec<ParticipantId>,
        statements: Vec<StatementId>,
        values: Vec<u8>,
        provenance: Vec<Provenance>,
    ) -> Result<Self, String> {
        let cells = participants.len() * statements.len();
        if values.len() != cells {
            return Err(format!("expected {cells} values, found {}", values.len()));
        }
        if provenance.len() != cells {
            return Err(format!(
                "expected {cells} provenance flags, found {}",
                provenance.len()
            ));
        }
        if let Some(v) = values.iter().find(|v| **v > 1) {
            return Err(format!("vote values must be 0 or 1, found {v}"));
        }
        let participant_index = index_of(&participants)
            .map_err(|id| format!("duplicate participant id {id} in matrix"))?;
        let statement_index =
            index_of(&statements).map_err(|id| format!("duplicate statement id {id} in matrix"))?;
        Ok(Self {
            participants,
            statements,
            values,
            provenance,
            participant_index,
            statement_index,
        })
    }

    pub fn participants(&self) -> &[ParticipantId] {
        &self.participants
    }

    pub fn statements(&self) -> &[StatementId] {
        &self.statements
    }

    pub fn value(&self, participant: &ParticipantId, statement: &StatementId) -> Option<u8> {
        let p = *self.participant_index.get(participant)?;
        let s = *self.statement_index.get(statement)?;
        Some(self.values[p * self.statements.len() + s])
    }

    pub fn provenance(
        &self,
        participant: &ParticipantId,
        statement: &StatementId,
    ) -> Option<Provenance> {
        let p = *self.participant_index.get(participant)?;
        let s = *self.statement_index.get(statement)?;
        Some(self.provenance[p * self.statements.len() + s])
    }

    /// (value, provenance) for every cell of one participant's row.
    pub fn row(&self, participant: &ParticipantId) -> Option<Vec<(u8, Provenance)>> {
        let p = *self.participant_index.get(participant)?;
        let n = self.statements.len();
        Some(
            (0..n)
                .map(|s| (self.values[p * n + s], self.provenance[p * n + s]))
                .collect(),
        )
    }
}

fn index_of<T: Clone + Ord + fmt::Display>(ids: &[T]) -> Result<BTreeMap<T, usize>, T> {
    let mut map = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(id.clone());
        }
    }
    Ok(map)
}

#[derive(Serialize, Deserialize)]
struct CompleteVotesFile {
    participants: Vec<ParticipantId>,
    statements: Vec<StatementId>,
    values: Vec<Vec<u8>>,
    provenance: Vec<Vec<Provenance>>,
}

impl TryFrom<CompleteVotesFile> for CompleteVoteMatrix {
    type Error = String;

    fn try_from(file: CompleteVotesFile) -> Result<Self, String> {
        let width = file.statements.len();
        for (label, rows, want) in [
            ("values", file.values.len(), file.participants.len()),
            ("provenance", file.provenance.len(), file.participants.len()),
        ] {
            if rows != want {
                return Err(format!("expected {want} {label} rows, found {rows}"));
            }
        }
        if let Some(row) = file.values.iter().find(|r| r.len() != width) {
            return Err(format!(
                "expected {width} values per row, found {}",
                row.len()
            ));
        }
        if let Some(row) = file.provenance.iter().find(|r| r.len() != width) {
            return Err(format!(
                "expected {width} provenance flags per row, found {}",
                row.len()
            ));
        }
        CompleteVoteMatrix::new(
            file.participants,
            file.statements,
            file.values.into_iter().flatten().collect(),
            file.provenance.into_iter().flatten().collect(),
        )
    }
}

impl From<CompleteVoteMatrix> for CompleteVotesFile {
    fn from(m: CompleteVoteMatrix) -> Self {
        let width = m.statements.len();
        let values = if width == 0 {
            vec![Vec::new(); m.participants.len()]
        } else {
            m.values.chunks(width).map(<[u8]>::to_vec).collect()
        };
        let provenance = if width == 0 {
            vec![Vec::new(); m.participants.len()]
        } else {
            m.provenance
                .chunks(width)
                .map(<[Provenance]>::to_vec)
                .collect()
        };
        CompleteVotesFile {
            participants: m.participants,
            statements: m.statements,
            values,
            provenance,
        }
    }
}

/// One five-point Likert rating of a collective statement.
///
/// Values 4 and 5 count as agreement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertBallot {
    pub participant_id: ParticipantId,
    pub statement_id: StatementId,
    /// Rating from 1 (strongly disagree) to 5 (strongly agree).
    pub value: u8,
}

/// One participant's full preference order over the collective statements,
/// most preferred first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankBallot {
    pub participant_id: ParticipantId,
    pub ranking: Vec<StatementId>,
}

/// The final vote: Likert ratings and rank ballots on the collective
/// statements.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalVoteRecord {
    pub likert: Vec<LikertBallot>,
    pub rankings: Vec<RankBallot>,
}

/// Everything known about one dialogue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DialogueBundle {
    pub participants: Vec<Participant>,
    pub partition: GroupPartition,
    pub statements: Vec<Statement>,
    pub votes: SparseVoteMatrix,
    pub final_votes: Option<FinalVoteRecord>,
}

impl DialogueBundle {
    /// The stipulated partition, groups in declaration order.
    pub fn group_partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn statement_ids(&self) -> Vec<StatementId> {
        self.statements.iter().map(|s| s.id.clone()).collect()
    }

    pub fn participant_ids(&self) -> Vec<ParticipantId> {
        self.participants.iter().map(|p| p.id.clone()).collect()
    }
}

/// Why a bundle could not be read or failed validation.
#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("bundle failed validation with {} violation(s):\n{report}", report.violations.len())]
    Invalid { report: ValidationReport },
}

/// Violation categories reported by [`validate_bundle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    DuplicateId,
    UnknownGroup,
    UnknownParticipant,
    UnknownStatement,
    EmptyPartition,
    EmptyGroup,
    OverlappingGroups,
    UnassignedParticipant,
    GroupMismatch,
    EmptyStatementText,
    DuplicateVote,
    LikertOutOfRange,
    DuplicateLikert,
    DuplicateRanking,
    MalformedRanking,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ViolationKind::DuplicateId => "duplicate-id",
            ViolationKind::UnknownGroup => "unknown-group",
            ViolationKind::UnknownParticipant => "unknown-participant",
            ViolationKind::UnknownStatement => "unknown-statement",
            ViolationKind::EmptyPartition => "empty-partition",
            ViolationKind::EmptyGroup => "empty-group",
            ViolationKind::OverlappingGroups => "overlapping-groups",
            ViolationKind::UnassignedParticipant => "unassigned-participant",
            ViolationKind::GroupMismatch => "group-mismatch",
            ViolationKind::EmptyStatementText => "empty-statement-text",
            ViolationKind::DuplicateVote => "duplicate-vote",
            ViolationKind::LikertOutOfRange => "likert-out-of-range",
            ViolationKind::DuplicateLikert => "duplicate-likert",
            ViolationKind::DuplicateRanking => "duplicate-ranking",
            ViolationKind::MalformedRanking => "malformed-ranking",
        };
        f.write_str(name)
    }
}

/// One integrity violation, naming the offending entity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Id of the entity the violation is about.
    pub subject: String,
    pub message: String,
}

/// The full list of integrity violations found in a bundle.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, subject: impl fmt::Display, message: String) {
        self.violations.push(Violation {
            kind,
            subject: subject.to_string(),
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  [{}] {}: {}", v.kind, v.subject, v.message)?;
        }
        Ok(())
    }
}

const PARTICIPANTS_FILE: &str = "participants.json";
const GROUPS_FILE: &str = "groups.json";
const STATEMENTS_FILE: &str = "statements.json";
const VOTES_FILE: &str = "votes.json";
const FINAL_VOTES_FILE: &str = "final_votes.json";

#[derive(Serialize, Deserialize)]
struct ParticipantsFile {
    participants: Vec<Participant>,
}

#[derive(Serialize, Deserialize)]
struct GroupsFile {
    groups: Vec<Group>,
}

#[derive(Serialize, Deserialize)]
struct StatementsFile {
    statements: Vec<Statement>,
}

#[derive(Serialize, Deserialize)]
struct VotesFile {
    votes: Vec<VoteEntry>,
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, file: &str) -> Result<T, BundleError> {
    let path = dir.join(file);
    let text = fs::read_to_string(&path).map_err(|source| BundleError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| BundleError::Malformed {
        path,
        message: e.to_string(),
    })
}

/// Parses a bundle directory without checking referential integrity.
pub fn read_bundle(dir: &Path) -> Result<DialogueBundle, BundleError> {
    let participants: ParticipantsFile = read_json(dir, PARTICIPANTS_FILE)?;
    let groups: GroupsFile = read_json(dir, GROUPS_FILE)?;
    let statements: StatementsFile = read_json(dir, STATEMENTS_FILE)?;
    let votes: VotesFile = read_json(dir, VOTES_FILE)?;
    let final_votes = if dir.join(FINAL_VOTES_FILE).is_file() {
        Some(read_json(dir, FINAL_VOTES_FILE)?)
    } else {
        None
    };
    Ok(DialogueBundle {
        participants: participants.participants,
        partition: GroupPartition {
            groups: groups.groups,
        },
        statements: statements.statements,
        votes: votes.votes.into(),
        final_votes,
    })
}

impl From<Vec<VoteEntry>> for SparseVoteMatrix {
    fn from(entries: Vec<VoteEntry>) -> Self {
        SparseVoteMatrix { entries }
    }
}

/// Parses and validates a bundle, refusing any integrity violation.
pub fn load_bundle(dir: &Path) -> Result<DialogueBundle, BundleError> {
    let bundle = read_bundle(dir)?;
    let report = validate_bundle(&bundle);
    if report.is_valid() {
        Ok(bundle)
    } else {
        Err(BundleError::Invalid { report })
    }
}

/// Writes a bundle directory in canonical form.
pub fn save_bundle(bundle: &DialogueBundle, dir: &Path) -> Result<(), BundleError> {
    fn write<T: Serialize>(dir: &Path, file: &str, value: &T) -> Result<(), BundleError> {
        let path = dir.join(file);
        canonical::write_canonical_json(&path, value)
            .map_err(|source| BundleError::Io { path, source })
    }
    write(
        dir,
        PARTICIPANTS_FILE,
        &ParticipantsFile {
            participants: bundle.participants.clone(),
        },
    )?;
    write(
        dir,
        GROUPS_FILE,
        &GroupsFile {
            groups: bundle.partition.groups.clone(),
        },
    )?;
    write(
        dir,
        STATEMENTS_FILE,
        &StatementsFile {
            statements: bundle.statements.clone(),
        },
    )?;
    write(
        dir,
        VOTES_FILE,
        &VotesFile {
            votes: bundle.votes.entries.clone(),
        },
    )?;
    if let Some(final_votes) = &bundle.final_votes {
        write(dir, FINAL_VOTES_FILE, final_votes)?;
    }
    Ok(())
}

/// Checks referential integrity and collects every violation found.
pub fn validate_bundle(bundle: &DialogueBundle) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut participant_ids = BTreeSet::new();
    for p in &bundle.participants {
        if !participant_ids.insert(&p.id) {
            report.push(
                ViolationKind::DuplicateId,
                &p.id,
                format!("participant id {} declared more than once", p.id),
            );
        }
    }
    let mut group_ids = BTreeSet::new();
    for g in &bundle.partition.groups {
        if !group_ids.insert(&g.id) {
            report.push(
                ViolationKind::DuplicateId,
                &g.id,
                format!("group id {} declared more than once", g.id),
            );
        }
    }
    let mut statement_ids = BTreeSet::new();
    for s in &bundle.statements {
        if !statement_ids.insert(&s.id) {
            report.push(
                ViolationKind::DuplicateId,
                &s.id,
                format!("statement id {} declared more than once", s.id),
            );
        }
    }

    if bundle.partition.groups.is_empty() {
        report.push(
            ViolationKind::EmptyPartition,
            "partition",
            "the partition declares no groups".to_owned(),
        );
    }

    let mut assigned: BTreeMap<&ParticipantId, &GroupId> = BTreeMap::new();
    for g in &bundle.partition.groups {
        if g.members.is_empty() {
            report.push(
                ViolationKind::EmptyGroup,
                &g.id,
                format!("group {} has no members", g.id),
            );
        }
        for m in &g.members {
            if !participant_ids.contains(m) {
                report.push(
                    ViolationKind::UnknownParticipant,
                    m,
                    format!("group {} lists unknown participant {m}", g.id),
                );
            }
            match assigned.get(m) {
                Some(other) if *other != &g.id => {
                    report.push(
                        ViolationKind::OverlappingGroups,
                        m,
                        format!("participant {m} appears in groups {other} and {}", g.id),
                    );
                }
                Some(_) => {
                    report.push(
                        ViolationKind::OverlappingGroups,
                        m,
                        format!("participant {m} listed twice in group {}", g.id),
                    );
                }
                None => {
                    assigned.insert(m, &g.id);
                }
            }
        }
    }

    for p in &bundle.participants {
        if !group_ids.contains(&p.group_id) {
            report.push(
                ViolationKind::UnknownGroup,
                &p.id,
                format!("participant {} names unknown group {}", p.id, p.group_id),
            );
            continue;
        }
        match assigned.get(&p.id) {
            None => report.push(
                ViolationKind::UnassignedParticipant,
                &p.id,
                format!("participant {} is not a member of any group", p.id),
            ),
            Some(gid) if *gid != &p.group_id => report.push(
                ViolationKind::GroupMismatch,
                &p.id,
                format!(
                    "participant {} names group {} but is a member of {gid}",
                    p.id, p.group_id
                ),
            ),
            Some(_) => {}
        }
    }

    for s in &bundle.statements {
        if s.text.trim().is_empty() {
            report.push(
                ViolationKind::EmptyStatementText,
                &s.id,
                format!("statement {} has empty text", s.id),
            );
        }
        if let Some(author) = &s.author_id {
            if !participant_ids.contains(author) {
                report.push(
                    ViolationKind::UnknownParticipant,
                    author,
                    format!("statement {} names unknown author {author}", s.id),
                );
            }
        }
    }

    let mut seen_votes = BTreeSet::new();
    for v in &bundle.votes.entries {
        if !participant_ids.contains(&v.participant_id) {
            report.push(
                ViolationKind::UnknownParticipant,
                &v.participant_id,
                format!("vote cast by unknown participant {}", v.participant_id),
            );
        }
        if !statement_ids.contains(&v.statement_id) {
            report.push(
                ViolationKind::UnknownStatement,
                &v.statement_id,
                format!("vote cast on unknown statement {}", v.statement_id),
            );
        }
        if !seen_votes.insert((&v.participant_id, &v.statement_id)) {
            report.push(
                ViolationKind::DuplicateVote,
                &v.participant_id,
                format!(
                    "participant {} voted more than once on statement {}",
                    v.participant_id, v.statement_id
                ),
            );
        }
    }

    if let Some(final_votes) = &bundle.final_votes {
        validate_final_votes(final_votes, &participant_ids, &mut report);
    }

    report
}

fn validate_final_votes(
    final_votes: &FinalVoteRecord,
    participant_ids: &BTreeSet<&ParticipantId>,
    report: &mut ValidationReport,
) {
    let mut seen_likert = BTreeSet::new();
    for b in &final_votes.likert {
        if !participant_ids.contains(&b.participant_id) {
            report.push(
                ViolationKind::UnknownParticipant,
                &b.participant_id,
                format!("rating cast by unknown participant {}", b.participant_id),
            );
        }
        if !(1..=5).contains(&b.value) {
            report.push(
                ViolationKind::LikertOutOfRange,
                &b.participant_id,
                format!(
                    "rating {} on statement {} is outside 1..=5",
                    b.value, b.statement_id
                ),
            );
        }
        if !seen_likert.insert((&b.participant_id, &b.statement_id)) {
            report.push(
                ViolationKind::DuplicateLikert,
                &b.participant_id,
                format!(
                    "participant {} rated statement {} more than once",
                    b.participant_id, b.statement_id
                ),
            );
        }
    }

    let reference: Option<BTreeSet<&StatementId>> = final_votes
        .rankings
        .first()
        .map(|b| b.ranking.iter().collect());
    let mut seen_rankers = BTreeSet::new();
    for b in &final_votes.rankings {
        if !participant_ids.contains(&b.participant_id) {
            report.push(
                ViolationKind::UnknownParticipant,
                &b.participant_id,
                format!("ranking cast by unknown participant {}", b.participant_id),
            );
        }
        if !seen_rankers.insert(&b.participant_id) {
            report.push(
                ViolationKind::DuplicateRanking,
                &b.participant_id,
                format!(
                    "participant {} submitted more than one ranking",
                    b.participant_id
                ),
            );
        }
        if b.ranking.is_empty() {
            report.push(
                ViolationKind::MalformedRanking,
                &b.participant_id,
                format!("participant {} submitted an empty ranking", b.participant_id),
            );
            continue;
        }
        let set: BTreeSet<&StatementId> = b.ranking.iter().collect();
        if set.len() != b.ranking.len() {
            report.push(
                ViolationKind::MalformedRanking,
                &b.participant_id,
                format!(
                    "ranking by participant {} lists a statement more than once",
                    b.participant_id
                ),
            );
        } else if let Some(reference) = &reference {
            if &set != reference {
                report.push(
                    ViolationKind::MalformedRanking,
                    &b.participant_id,
                    format!(
                        "ranking by participant {} covers a different statement set \
                         than earlier ballots",
                        b.participant_id
                    ),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_bundle() -> DialogueBundle {
        let participants = vec![
            participant("p1", "g1"),
            participant("p2", "g1"),
            participant("p3", "g2"),
        ];
        let partition = GroupPartition {
            groups: vec![
                group("g1", "North", &["p1", "p2"]),
                group("g2", "South", &["p3"]),
            ],
        };
        let statements = vec![statement("s1", "water"), statement("s2", "roads")];
        let votes = SparseVoteMatrix {
            entries: vec![
                vote("p1", "s1", AgreeVote::Agree),
                vote("p2", "s1", AgreeVote::Disagree),
                vote("p3", "s2", AgreeVote::Agree),
            ],
        };
        DialogueBundle {
            participants,
            partition,
            statements,
            votes,
            final_votes: None,
        }
    }

    fn participant(id: &str, gid: &str) -> Participant {
        Participant {
            id: id.into(),
            group_id: gid.into(),
            demographics: BTreeMap::new(),
        }
    }

    fn group(id: &str, name: &str, members: &[&str]) -> Group {
        Group {
            id: id.into(),
            name: name.to_owned(),
            members: members.iter().map(|m| (*m).into()).collect(),
        }
    }

    fn statement(id: &str, text: &str) -> Statement {
        Statement {
            id: id.into(),
            prompt_id: "q1".to_owned(),
            text: text.to_owned(),
            language: "en".to_owned(),
            author_id: None,
        }
    }

    fn vote(p: &str, s: &str, v: AgreeVote) -> VoteEntry {
        VoteEntry {
            participant_id: p.into(),
            statement_id: s.into(),
            vote: v,
        }
    }

    #[test]
    fn valid_bundle_passes_validation() {
        let report = validate_bundle(&sample_bundle());
        assert!(report.is_valid(), "unexpected violations: {report}");
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut bundle = sample_bundle();
        bundle.final_votes = Some(FinalVoteRecord {
            likert: vec![LikertBallot {
                participant_id: "p1".into(),
                statement_id: "s1".into(),
                value: 5,
            }],
            rankings: vec![
                RankBallot {
                    participant_id: "p1".into(),
                    ranking: vec!["s1".into(), "s2".into()],
                },
                RankBallot {
                    participant_id: "p2".into(),
                    ranking: vec!["s2".into(), "s1".into()],
                },
            ],
        });
        save_bundle(&bundle, dir.path()).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded, bundle);
    }

    #[test]
    fn save_is_byte_stable() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let bundle = sample_bundle();
        save_bundle(&bundle, dir_a.path()).unwrap();
        save_bundle(&load_bundle(dir_a.path()).unwrap(), dir_b.path()).unwrap();
        for file in [PARTICIPANTS_FILE, GROUPS_FILE, STATEMENTS_FILE, VOTES_FILE] {
            let a = fs::read(dir_a.path().join(file)).unwrap();
            let b = fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs after a load/save cycle");
        }
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_bundle(dir.path()).unwrap_err();
        assert!(err.to_string().contains("participants.json"));
    }

    #[test]
    fn unknown_group_is_reported_with_ids() {
        let mut bundle = sample_bundle();
        bundle.participants[0].group_id = "g9".into();
        let report = validate_bundle(&bundle);
        let v = report
            .violations
            .iter()
            .find(|v| v.kind == ViolationKind::UnknownGroup)
            .expect("unknown-group violation");
        assert_eq!(v.subject, "p1");
        assert!(v.message.contains("g9"));
    }

    #[test]
    fn duplicate_vote_is_reported() {
        let mut bundle = sample_bundle();
        bundle
            .votes
            .entries
            .push(vote("p1", "s1", AgreeVote::Disagree));
        let report = validate_bundle(&bundle);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::DuplicateVote && v.subject == "p1"));
    }

    #[test]
    fn overlapping_groups_are_reported() {
        let mut bundle = sample_bundle();
        bundle.partition.groups[1].members.push("p1".into());
        let report = validate_bundle(&bundle);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::OverlappingGroups && v.subject == "p1"));
    }

    #[test]
    fn unassigned_participant_is_reported() {
        let mut bundle = sample_bundle();
        bundle.participants.push(participant("p4", "g2"));
        let report = validate_bundle(&bundle);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::UnassignedParticipant && v.subject == "p4"));
    }

    #[test]
    fn vote_on_unknown_statement_is_reported() {
        let mut bundle = sample_bundle();
        bundle
            .votes
            .entries
            .push(vote("p1", "s9", AgreeVote::Agree));
        let report = validate_bundle(&bundle);
        let v = report
            .violations
            .iter()
            .find(|v| v.kind == ViolationKind::UnknownStatement)
            .expect("unknown-statement violation");
        assert_eq!(v.subject, "s9");
    }

    #[test]
    fn load_refuses_invalid_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let mut bundle = sample_bundle();
        bundle.participants[0].group_id = "g9".into();
        save_bundle(&bundle, dir.path()).unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        match err {
            BundleError::Invalid { report } => {
                assert!(!report.is_valid());
            }
            other => panic!("expected validation failure, got {other}"),
        }
    }

    #[test]
    fn likert_range_and_duplicates_are_reported() {
        let mut bundle = sample_bundle();
        bundle.final_votes = Some(FinalVoteRecord {
            likert: vec![
                LikertBallot {
                    participant_id: "p1".into(),
                    statement_id: "s1".into(),
                    value: 6,
                },
                LikertBallot {
                    participant_id: "p2".into(),
                    statement_id: "s1".into(),
                    value: 4,
                },
                LikertBallot {
                    participant_id: "p2".into(),
                    statement_id: "s1".into(),
                    value: 4,
                },
            ],
            rankings: Vec::new(),
        });
        let report = validate_bundle(&bundle);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::LikertOutOfRange));
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::DuplicateLikert && v.subject == "p2"));
    }

    #[test]
    fn inconsistent_rankings_are_reported() {
        let mut bundle = sample_bundle();
        bundle.final_votes = Some(FinalVoteRecord {
            likert: Vec::new(),
            rankings: vec![
                RankBallot {
                    participant_id: "p1".into(),
                    ranking: vec!["s1".into(), "s2".into()],
                },
                RankBallot {
                    participant_id: "p2".into(),
                    ranking: vec!["s1".into()],
                },
                RankBallot {
                    participant_id: "p3".into(),
                    ranking: vec!["s2".into(), "s2".into()],
                },
            ],
        });
        let report = validate_bundle(&bundle);
        let malformed: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.kind == ViolationKind::MalformedRanking)
            .collect();
        assert_eq!(malformed.len(), 2);
    }

    #[test]
    fn complete_matrix_rejects_bad_dimensions() {
        let err = CompleteVoteMatrix::new(
            vec!["p1".into(), "p2".into()],
            vec!["s1".into()],
            vec![1],
            vec![Provenance::Stated],
        )
        .unwrap_err();
        assert!(err.contains("expected 2 values"));
    }

    #[test]
    fn complete_matrix_round_trips_through_json() {
        let matrix = CompleteVoteMatrix::new(
            vec!["p1".into(), "p2".into()],
            vec!["s1".into(), "s2".into()],
            vec![1, 0, 0, 1],
            vec![
                Provenance::Stated,
                Provenance::Inferred,
                Provenance::Inferred,
                Provenance::Stated,
            ],
        )
        .unwrap();
        let text = crate::canonical::to_canonical_json(&matrix).unwrap();
        let back: CompleteVoteMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, matrix);
        assert_eq!(back.value(&"p2".into(), &"s1".into()), Some(0));
        assert_eq!(
            back.provenance(&"p1".into(), &"s2".into()),
            Some(Provenance::Inferred)
        );
    }

    #[test]
    fn canonical_entries_sort_by_participant_then_statement() {
        let votes = SparseVoteMatrix {
            entries: vec![
                vote("p2", "s1", AgreeVote::Agree),
                vote("p1", "s2", AgreeVote::Agree),
                vote("p1", "s1", AgreeVote::Agree),
            ],
        };
        let order: Vec<(String, String)> = votes
            .canonical_entries()
            .iter()
            .map(|e| (e.participant_id.0.clone(), e.statement_id.0.clone()))
            .collect();
        assert_eq!(
            order,
            vec![
                ("p1".to_owned(), "s1".to_owned()),
                ("p1".to_owned(), "s2".to_owned()),
                ("p2".to_owned(), "s1".to_owned()),
            ]
        );
    }

    #[test]
    fn partition_reports_sizes_in_declaration_order() {
        let bundle = sample_bundle();
        let sizes = bundle.group_partition().sizes();
        assert_eq!(
            sizes,
            vec![(GroupId::new("g1"), 2), (GroupId::new("g2"), 1)]
        );
    }
}
