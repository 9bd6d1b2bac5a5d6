//! Revision counts per committer, credited contributions and cross-space
//! contribution profiles.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::Roster;
use crate::model::{ParticipantId, RevisionRecord, Role, Space};
use crate::thread::Discussion;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RevisionCounts {
    pub total: usize,
    pub counts: BTreeMap<ParticipantId, usize>,
    /// count / total for each committer.
    pub fractions: BTreeMap<ParticipantId, f64>,
}

/// Records per committer, restricted to `space` when given.
pub fn effective_revision_counts(records: &[RevisionRecord], space: Option<Space>) -> RevisionCounts {
    let mut counts: BTreeMap<ParticipantId, usize> = BTreeMap::new();
    let mut total = 0;
    for r in records.iter().filter(|r| space.is_none_or(|s| r.space == s)) {
        *counts.entry(r.committer.clone()).or_insert(0) += 1;
        total += 1;
    }
    let fractions = counts
        .iter()
        .map(|(p, &c)| (p.clone(), c as f64 / total as f64))
        .collect();
    RevisionCounts {
        total,
        counts,
        fractions,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CreditCounts {
    pub total: usize,
    pub credited: BTreeMap<ParticipantId, usize>,
    /// Effective plus credited, for everyone appearing in either map.
    pub combined: BTreeMap<ParticipantId, usize>,
}

/// A record crediting k participants adds one to each of them.
pub fn credited_contributions(records: &[RevisionRecord], space: Option<Space>) -> CreditCounts {
    let scoped: Vec<&RevisionRecord> = records.iter().filter(|r| space.is_none_or(|s| r.space == s)).collect();
    let mut credited: BTreeMap<ParticipantId, usize> = BTreeMap::new();
    let mut combined: BTreeMap<ParticipantId, usize> = BTreeMap::new();
    for r in &scoped {
        *combined.entry(r.committer.clone()).or_insert(0) += 1;
        for p in &r.credited {
            *credited.entry(p.clone()).or_insert(0) += 1;
            *combined.entry(p.clone()).or_insert(0) += 1;
        }
    }
    CreditCounts {
        total: scoped.len(),
        credited,
        combined,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContributionProfile {
    pub participant: ParticipantId,
    pub role: Role,
    pub discussion_messages: BTreeMap<String, usize>,
    pub doc_revisions_effective: usize,
    pub doc_revisions_credited: usize,
    pub impl_revisions_effective: usize,
    pub impl_revisions_credited: usize,
}

/// Joins message counts on each list with revision counts in both spaces.
/// Every participant who posted, committed or was credited appears once.
pub fn contribution_profiles(
    roster: &Roster,
    lists: &[(&str, &[Discussion])],
    records: &[RevisionRecord],
) -> Vec<ContributionProfile> {
    let mut everyone: BTreeSet<ParticipantId> = BTreeSet::new();
    let mut messages: BTreeMap<(&str, ParticipantId), usize> = BTreeMap::new();
    for (list, discussions) in lists {
        for d in discussions.iter() {
            for m in &d.messages {
                everyone.insert(m.sender.clone());
                *messages.entry((list, m.sender.clone())).or_insert(0) += 1;
            }
        }
    }
    for r in records {
        everyone.insert(r.committer.clone());
        everyone.extend(r.credited.iter().cloned());
    }
    let count = |space: Space, p: &ParticipantId| -> (usize, usize) {
        let in_space = records.iter().filter(|r| r.space == space);
        let eff = in_space.clone().filter(|r| &r.committer == p).count();
        let cred = in_space.filter(|r| r.credited.contains(p)).count();
        (eff, cred)
    };
    everyone
        .into_iter()
        .map(|p| {
            let discussion_messages = lists
                .iter()
                .map(|(l, _)| (l.to_string(), messages.get(&(*l, p.clone())).copied().unwrap_or(0)))
                .collect();
            let (doc_eff, doc_cred) = count(Space::Documentation, &p);
            let (impl_eff, impl_cred) = count(Space::Implementation, &p);
            ContributionProfile {
                role: roster.role_of(&p),
                participant: p,
                discussion_messages,
                doc_revisions_effective: doc_eff,
                doc_revisions_credited: doc_cred,
                impl_revisions_effective: impl_eff,
                impl_revisions_credited: impl_cred,
            }
        })
        .collect()
}
