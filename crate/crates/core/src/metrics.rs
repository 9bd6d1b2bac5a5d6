//! Participation and temporal-organization measures over discussions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ArgumentError;
use crate::ingest::Roster;
use crate::model::{ParticipantId, Role, Timestamp, SECONDS_PER_DAY};
use crate::thread::Discussion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Regularity {
    Regular,
    Occasional,
}

/// Disjoint participant categories, assigned by precedence
/// ProjectLeader > CrossParticipant > CommonOnly > RegularOnly > OccasionalOnly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    ProjectLeader,
    CrossParticipant,
    CommonOnly,
    RegularOnly,
    OccasionalOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipationProfile {
    pub participant: ParticipantId,
    pub role: Role,
    pub per_list_discussion_count: BTreeMap<String, usize>,
    pub per_list_message_count: BTreeMap<String, usize>,
    /// Only lists where the participant took part in at least one discussion.
    pub regularity: BTreeMap<String, Regularity>,
    pub is_common: bool,
    pub is_cross: bool,
    pub category: Category,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParallelPair {
    pub discussion_a: String,
    pub discussion_b: String,
    pub subject_key: String,
    pub overlap: (Timestamp, Timestamp),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineRecord {
    pub discussion_id: String,
    pub list_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub label: String,
    pub group: Option<String>,
    /// Discussions on the other list this one runs in parallel with.
    pub parallel_with: Vec<String>,
}

fn check_list(discussions: &[Discussion], list_id: &str) -> Result<(), ArgumentError> {
    match discussions.iter().find(|d| d.list_id != list_id) {
        Some(d) => Err(ArgumentError::WrongList {
            discussion: d.discussion_id.clone(),
            found: d.list_id.clone(),
            expected: list_id.to_string(),
        }),
        None => Ok(()),
    }
}

/// Number of distinct discussions each participant posted in.
pub fn participation_counts(
    discussions: &[Discussion],
    list_id: &str,
) -> Result<BTreeMap<ParticipantId, usize>, ArgumentError> {
    check_list(discussions, list_id)?;
    let mut counts = BTreeMap::new();
    for d in discussions {
        for p in &d.participants {
            *counts.entry(p.clone()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

/// Messages posted by each participant across the discussions.
pub fn message_counts(discussions: &[Discussion]) -> BTreeMap<ParticipantId, usize> {
    let mut counts = BTreeMap::new();
    for d in discussions {
        for m in &d.messages {
            *counts.entry(m.sender.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Nearest-rank 75th percentile: the element at 1-based rank ceil(0.75·n)
/// of the ascending sort.
pub fn third_quartile(counts: &[usize]) -> Result<usize, ArgumentError> {
    if counts.is_empty() {
        return Err(ArgumentError::EmptyMultiset);
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let rank = (3 * sorted.len()).div_ceil(4);
    Ok(sorted[rank - 1])
}

/// Regular iff the count is strictly greater than the list's Q3.
pub fn classify_regularity(counts: &BTreeMap<ParticipantId, usize>) -> BTreeMap<ParticipantId, Regularity> {
    let values: Vec<usize> = counts.values().copied().collect();
    let Ok(q3) = third_quartile(&values) else {
        return BTreeMap::new();
    };
    counts
        .iter()
        .map(|(p, &c)| {
            let r = if c > q3 {
                Regularity::Regular
            } else {
                Regularity::Occasional
            };
            (p.clone(), r)
        })
        .collect()
}

/// Participants present in both lists.
pub fn common_participants(lists: &[(&str, &[Discussion])]) -> Result<BTreeSet<ParticipantId>, ArgumentError> {
    if lists.len() != 2 {
        return Err(ArgumentError::ListCount(lists.len()));
    }
    let people = |ds: &[Discussion]| -> BTreeSet<ParticipantId> {
        ds.iter().flat_map(|d| d.participants.iter().cloned()).collect()
    };
    let a = people(lists[0].1);
    let b = people(lists[1].1);
    Ok(a.intersection(&b).cloned().collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "threshold", rename_all = "snake_case")]
pub enum SubjectMatch {
    #[default]
    Exact,
    /// Token-set Jaccard similarity at or above the threshold.
    Jaccard(f64),
}

pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let sa: BTreeSet<&str> = a.split_whitespace().collect();
    let sb: BTreeSet<&str> = b.split_whitespace().collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.intersection(&sb).count() as f64;
    let union = sa.union(&sb).count() as f64;
    inter / union
}

/// Same-topic discussions on two different lists whose intervals intersect.
pub fn find_parallel_discussions(
    discussions_a: &[Discussion],
    discussions_b: &[Discussion],
    mode: SubjectMatch,
) -> Result<Vec<ParallelPair>, ArgumentError> {
    for a in discussions_a {
        if let Some(b) = discussions_b.iter().find(|b| b.list_id == a.list_id) {
            return Err(ArgumentError::SameList(b.list_id.clone()));
        }
    }
    let mut pairs = Vec::new();
    for a in discussions_a {
        for b in discussions_b {
            let same_topic = match mode {
                SubjectMatch::Exact => a.subject_key == b.subject_key,
                SubjectMatch::Jaccard(t) => token_jaccard(&a.subject_key, &b.subject_key) >= t,
            };
            if same_topic && a.start <= b.end && b.start <= a.end {
                pairs.push(ParallelPair {
                    discussion_a: a.discussion_id.clone(),
                    discussion_b: b.discussion_id.clone(),
                    subject_key: a.subject_key.clone(),
                    overlap: (a.start.max(b.start), a.end.min(b.end)),
                });
            }
        }
    }
    pairs.sort();
    Ok(pairs)
}

/// Participants who posted in both discussions of at least one pair.
pub fn cross_participants(pairs: &[ParallelPair], discussions: &[Discussion]) -> BTreeSet<ParticipantId> {
    let by_id: BTreeMap<&str, &Discussion> = discussions.iter().map(|d| (d.discussion_id.as_str(), d)).collect();
    let mut out = BTreeSet::new();
    for pair in pairs {
        if let (Some(a), Some(b)) = (
            by_id.get(pair.discussion_a.as_str()),
            by_id.get(pair.discussion_b.as_str()),
        ) {
            out.extend(a.participants.intersection(&b.participants).cloned());
        }
    }
    out
}

/// One profile per participant active on either list.
pub fn participation_profiles(
    lists: &[(&str, &[Discussion])],
    common: &BTreeSet<ParticipantId>,
    cross: &BTreeSet<ParticipantId>,
    roster: &Roster,
) -> Result<Vec<ParticipationProfile>, ArgumentError> {
    let mut profiles: BTreeMap<ParticipantId, ParticipationProfile> = BTreeMap::new();
    for (list_id, discussions) in lists {
        let counts = participation_counts(discussions, list_id)?;
        let regularity = classify_regularity(&counts);
        let messages = message_counts(discussions);
        for (p, &count) in &counts {
            let profile = profiles.entry(p.clone()).or_insert_with(|| ParticipationProfile {
                participant: p.clone(),
                role: roster.role_of(p),
                per_list_discussion_count: BTreeMap::new(),
                per_list_message_count: BTreeMap::new(),
                regularity: BTreeMap::new(),
                is_common: common.contains(p),
                is_cross: cross.contains(p),
                category: Category::OccasionalOnly,
            });
            profile.per_list_discussion_count.insert(list_id.to_string(), count);
            profile
                .per_list_message_count
                .insert(list_id.to_string(), messages.get(p).copied().unwrap_or(0));
            profile.regularity.insert(list_id.to_string(), regularity[p]);
        }
    }
    for profile in profiles.values_mut() {
        profile.category = if profile.role == Role::ProjectLeader {
            Category::ProjectLeader
        } else if profile.is_cross {
            Category::CrossParticipant
        } else if profile.is_common {
            Category::CommonOnly
        } else if profile.regularity.values().any(|r| *r == Regularity::Regular) {
            Category::RegularOnly
        } else {
            Category::OccasionalOnly
        };
    }
    Ok(profiles.into_values().collect())
}

/// Rows of the involvement table. The first five are disjoint; the `All*`
/// rows are overlapping roll-ups (every common, cross, regular or
/// occasional participant regardless of precedence).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InvolvementCategory {
    ProjectLeader,
    RegularOnly,
    OccasionalOnly,
    CommonOnly,
    CrossParticipant,
    AllCommon,
    AllCross,
    AllRegular,
    AllOccasional,
}

impl InvolvementCategory {
    pub const ALL: [InvolvementCategory; 9] = [
        InvolvementCategory::ProjectLeader,
        InvolvementCategory::RegularOnly,
        InvolvementCategory::OccasionalOnly,
        InvolvementCategory::CommonOnly,
        InvolvementCategory::CrossParticipant,
        InvolvementCategory::AllCommon,
        InvolvementCategory::AllCross,
        InvolvementCategory::AllRegular,
        InvolvementCategory::AllOccasional,
    ];

    pub fn is_exclusive(self) -> bool {
        !matches!(
            self,
            InvolvementCategory::AllCommon
                | InvolvementCategory::AllCross
                | InvolvementCategory::AllRegular
                | InvolvementCategory::AllOccasional
        )
    }

    fn includes(self, p: &ParticipationProfile, list_id: &str) -> bool {
        use InvolvementCategory as I;
        match self {
            I::ProjectLeader => p.category == Category::ProjectLeader,
            I::RegularOnly => p.category == Category::RegularOnly,
            I::OccasionalOnly => p.category == Category::OccasionalOnly,
            I::CommonOnly => p.category == Category::CommonOnly,
            I::CrossParticipant => p.category == Category::CrossParticipant,
            I::AllCommon => p.is_common,
            I::AllCross => p.is_cross,
            I::AllRegular => p.regularity.get(list_id) == Some(&Regularity::Regular),
            I::AllOccasional => p.regularity.get(list_id) == Some(&Regularity::Occasional),
        }
    }
}

impl fmt::Display for InvolvementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvolvementRow {
    pub category: InvolvementCategory,
    pub list_id: String,
    pub members: usize,
    pub messages: usize,
    /// `None` when no member of the category posted on the list.
    pub mean: Option<f64>,
}

/// Mean messages per active member, for each category and list.
pub fn involvement_by_category(profiles: &[ParticipationProfile], list_ids: &[&str]) -> Vec<InvolvementRow> {
    let mut rows = Vec::new();
    for &category in &InvolvementCategory::ALL {
        for &list_id in list_ids {
            let active: Vec<usize> = profiles
                .iter()
                .filter(|p| category.includes(p, list_id))
                .filter_map(|p| p.per_list_message_count.get(list_id).copied())
                .filter(|&n| n > 0)
                .collect();
            let messages: usize = active.iter().sum();
            rows.push(InvolvementRow {
                category,
                list_id: list_id.to_string(),
                members: active.len(),
                messages,
                mean: (!active.is_empty()).then(|| messages as f64 / active.len() as f64),
            });
        }
    }
    rows
}

/// Mean gap between consecutive discussion openings, in days.
/// `None` for fewer than two discussions.
pub fn mean_opening_delay(discussions: &[Discussion]) -> Option<f64> {
    if discussions.len() < 2 {
        return None;
    }
    let mut starts: Vec<Timestamp> = discussions.iter().map(|d| d.start).collect();
    starts.sort_unstable();
    let total: i64 = starts.windows(2).map(|w| w[1] - w[0]).sum();
    Some(total as f64 / (starts.len() - 1) as f64 / SECONDS_PER_DAY as f64)
}

pub const UNLABELED: &str = "Unlabeled";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRule {
    pub stage: String,
    pub keywords: Vec<String>,
}

/// Ordered stage rules; the first rule with a keyword found in the
/// subject key wins.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLexicon {
    pub stages: Vec<StageRule>,
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
}

impl StageLexicon {
    /// Design steps of a language-change proposal, with starter keywords.
    pub fn design_steps() -> Self {
        let rule = |stage: &str, kws: &[&str]| StageRule {
            stage: stage.to_string(),
            keywords: kws.iter().map(|s| s.to_string()).collect(),
        };
        StageLexicon {
            stages: vec![
                rule("Elicitation of needs", &["need", "wish", "elicitation", "requirement"]),
                rule("Pre-PEP", &["pre-pep", "prepep"]),
                rule("PEP design", &["pep"]),
                rule("Proposals", &["proposal", "propose", "suggestion"]),
                rule("Refinements", &["refine", "issues", "rounding", "context"]),
                rule("Valorisation", &["announce", "released", "implemented"]),
                rule("Tutorials", &["tutorial", "howto", "example"]),
                rule("Debug and evolution", &["bug", "debug", "fix", "patch"]),
            ],
            overrides: BTreeMap::new(),
        }
    }

    fn has_stage(&self, stage: &str) -> bool {
        stage == UNLABELED || self.stages.iter().any(|s| s.stage == stage)
    }
}

/// Tags each discussion with a design step. Overrides take precedence;
/// unmatched discussions land in `Unlabeled`.
pub fn group_by_design_step(
    discussions: &[Discussion],
    lexicon: &StageLexicon,
    overrides: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, Vec<String>>, ArgumentError> {
    for (id, stage) in overrides {
        if !discussions.iter().any(|d| &d.discussion_id == id) {
            return Err(ArgumentError::UnknownDiscussion(id.clone()));
        }
        if !lexicon.has_stage(stage) {
            return Err(ArgumentError::UnknownStage(stage.clone()));
        }
    }
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for d in discussions {
        let stage = overrides.get(&d.discussion_id).cloned().unwrap_or_else(|| {
            lexicon
                .stages
                .iter()
                .find(|rule| {
                    rule.keywords
                        .iter()
                        .any(|k| !k.is_empty() && d.subject_key.contains(&k.to_lowercase()))
                })
                .map_or_else(|| UNLABELED.to_string(), |rule| rule.stage.clone())
        });
        groups.entry(stage).or_default().push(d.discussion_id.clone());
    }
    Ok(groups)
}

/// One record per discussion, sorted by list then start date.
pub fn build_timeline(
    discussions: &[Discussion],
    pairs: &[ParallelPair],
    groups: &BTreeMap<String, Vec<String>>,
) -> Vec<TimelineRecord> {
    let mut group_of: BTreeMap<&str, &str> = BTreeMap::new();
    for (stage, ids) in groups {
        if stage == UNLABELED {
            continue;
        }
        for id in ids {
            group_of.insert(id, stage);
        }
    }
    let mut records: Vec<TimelineRecord> = discussions
        .iter()
        .map(|d| {
            let mut parallel_with: Vec<String> = pairs
                .iter()
                .filter_map(|p| {
                    if p.discussion_a == d.discussion_id {
                        Some(p.discussion_b.clone())
                    } else if p.discussion_b == d.discussion_id {
                        Some(p.discussion_a.clone())
                    } else {
                        None
                    }
                })
                .collect();
            parallel_with.sort();
            let group = group_of.get(d.discussion_id.as_str()).map(|s| s.to_string());
            TimelineRecord {
                discussion_id: d.discussion_id.clone(),
                list_id: d.list_id.clone(),
                start: d.start,
                end: d.end,
                label: group.clone().unwrap_or_else(|| d.subject_key.clone()),
                group,
                parallel_with,
            }
        })
        .collect();
    records.sort_by(|a, b| (&a.list_id, a.start, &a.discussion_id).cmp(&(&b.list_id, b.start, &b.discussion_id)));
    records
}
