//! Brute-force recomputation of every bundle metric straight from ground
//! truth. Deliberately shares no metric code with the pipeline: only the
//! output types are common.

use std::collections::{BTreeMap, BTreeSet};

use super::GroundTruth;
use crate::attraction::{
    AttractionEdge, ContingencyTable, RdMatrix, ADMIN_DEVELOPER, CROSS_PARTICIPANT, PROJECT_LEADER, USER, USER_CHAMPION,
};
use crate::bundle::{AttractionMetrics, CorpusMetrics, ListMetrics, MetricsBundle, RevisionMetrics, BUNDLE_SCHEMA};
use crate::config::Thresholds;
use crate::metrics::{
    Category, InvolvementCategory, InvolvementRow, ParallelPair, ParticipationProfile, Regularity, StageLexicon,
    TimelineRecord, UNLABELED,
};
use crate::model::{MessageKey, ParticipantId, Role, Space, Timestamp};
use crate::quote::QuoteEdge;
use crate::revisions::{ContributionProfile, CreditCounts, RevisionCounts};

const DAY: f64 = 86_400.0;

/// Sorted-list nearest rank: index ceil(0.75·n) − 1.
pub fn oracle_q3(values: &[usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort();
    let rank = (0.75 * v.len() as f64).ceil() as usize;
    Some(v[rank - 1])
}

pub type OracleRd = (Vec<Vec<f64>>, Vec<Vec<Option<f64>>>);

/// Expected counts and relative deviations by direct cell enumeration.
pub fn oracle_rd(counts: &[Vec<u64>]) -> Option<OracleRd> {
    let n = counts.len();
    let mut total = 0u64;
    for row in counts {
        for &c in row {
            total += c;
        }
    }
    if total == 0 {
        return None;
    }
    let mut expected = vec![vec![0.0; n]; n];
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let row: u64 = counts[i].iter().sum();
            let col: u64 = counts.iter().map(|r| r[j]).sum();
            let e = (row as f64) * (col as f64) / (total as f64);
            expected[i][j] = e;
            if e != 0.0 {
                values[i][j] = Some(counts[i][j] as f64 / e - 1.0);
            }
        }
    }
    Some((expected, values))
}

struct Disc<'a> {
    id: &'a str,
    list: &'a str,
    key: &'a str,
    start: Timestamp,
    end: Timestamp,
    posters: BTreeSet<&'a ParticipantId>,
    senders: Vec<&'a ParticipantId>,
}

fn scheme_labels() -> Vec<String> {
    [USER, USER_CHAMPION, ADMIN_DEVELOPER, PROJECT_LEADER, CROSS_PARTICIPANT]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn oracle_metrics(gt: &GroundTruth) -> MetricsBundle {
    let roles: BTreeMap<ParticipantId, Role> = gt
        .roster
        .iter()
        .map(|e| (ParticipantId::new(e.canonical_name.clone()), e.role))
        .collect();
    let role = |p: &ParticipantId| roles.get(p).copied().unwrap_or(Role::Unknown);
    let list_ids: Vec<&str> = gt.lists.iter().map(|l| l.list_id.as_str()).collect();

    let mut discs: Vec<Disc> = gt
        .discussions
        .iter()
        .map(|d| Disc {
            id: &d.discussion_id,
            list: &d.list_id,
            key: &d.subject_key,
            start: d.messages.iter().map(|m| m.date).min().unwrap_or(0),
            end: d.messages.iter().map(|m| m.date).max().unwrap_or(0),
            posters: d.messages.iter().map(|m| &m.sender).collect(),
            senders: d.messages.iter().map(|m| &m.sender).collect(),
        })
        .collect();
    discs.sort_by(|a, b| (a.list, a.start, a.id).cmp(&(b.list, b.start, b.id)));

    // Per-list measures.
    let mut lists = Vec::new();
    let mut active: Vec<BTreeSet<ParticipantId>> = Vec::new();
    let mut disc_counts: Vec<BTreeMap<ParticipantId, usize>> = Vec::new();
    let mut msg_counts: Vec<BTreeMap<ParticipantId, usize>> = Vec::new();
    let mut regularities: Vec<BTreeMap<ParticipantId, Regularity>> = Vec::new();
    for l in &gt.lists {
        let here: Vec<&Disc> = discs.iter().filter(|d| d.list == l.list_id).collect();
        let mut dc: BTreeMap<ParticipantId, usize> = BTreeMap::new();
        let mut mc: BTreeMap<ParticipantId, usize> = BTreeMap::new();
        for d in &here {
            for p in &d.posters {
                *dc.entry((*p).clone()).or_default() += 1;
            }
            for p in &d.senders {
                *mc.entry((*p).clone()).or_default() += 1;
            }
        }
        let q3 = oracle_q3(&dc.values().copied().collect::<Vec<_>>());
        let reg: BTreeMap<ParticipantId, Regularity> = dc
            .iter()
            .map(|(p, &c)| {
                let r = match q3 {
                    Some(q) if c > q => Regularity::Regular,
                    _ => Regularity::Occasional,
                };
                (p.clone(), r)
            })
            .collect();
        let regular = reg.values().filter(|r| matches!(r, Regularity::Regular)).count();
        let delay = if here.len() >= 2 {
            let lo = here.iter().map(|d| d.start).min().unwrap_or(0);
            let hi = here.iter().map(|d| d.start).max().unwrap_or(0);
            Some((hi - lo) as f64 / (here.len() - 1) as f64 / DAY)
        } else {
            None
        };
        lists.push(ListMetrics {
            list_id: l.list_id.clone(),
            orientation: l.orientation,
            discussions: here.len(),
            participants: dc.len(),
            messages: here.iter().map(|d| d.senders.len()).sum(),
            participation: dc.clone(),
            q3,
            regular,
            occasional: reg.len() - regular,
            regularity: reg.clone(),
            mean_opening_delay_days: delay,
        });
        active.push(dc.keys().cloned().collect());
        disc_counts.push(dc);
        msg_counts.push(mc);
        regularities.push(reg);
    }

    let common: BTreeSet<ParticipantId> = active[0].intersection(&active[1]).cloned().collect();

    let mut pairs = Vec::new();
    for a in discs.iter().filter(|d| d.list == list_ids[0]) {
        for b in discs.iter().filter(|d| d.list == list_ids[1]) {
            if a.key == b.key && a.start <= b.end && b.start <= a.end {
                pairs.push(ParallelPair {
                    discussion_a: a.id.to_string(),
                    discussion_b: b.id.to_string(),
                    subject_key: a.key.to_string(),
                    overlap: (a.start.max(b.start), a.end.min(b.end)),
                });
            }
        }
    }
    pairs.sort();

    let mut cross = BTreeSet::new();
    for p in &pairs {
        let a = discs.iter().find(|d| d.id == p.discussion_a).expect("pair member");
        let b = discs.iter().find(|d| d.id == p.discussion_b).expect("pair member");
        for x in &a.posters {
            if b.posters.contains(x) {
                cross.insert((*x).clone());
            }
        }
    }

    // Profiles.
    let everyone: BTreeSet<ParticipantId> = active.iter().flatten().cloned().collect();
    let mut profiles = Vec::new();
    for p in &everyone {
        let mut per_d = BTreeMap::new();
        let mut per_m = BTreeMap::new();
        let mut reg = BTreeMap::new();
        for (k, l) in list_ids.iter().enumerate() {
            if let Some(&c) = disc_counts[k].get(p) {
                per_d.insert(l.to_string(), c);
                per_m.insert(l.to_string(), msg_counts[k].get(p).copied().unwrap_or(0));
                reg.insert(l.to_string(), regularities[k][p]);
            }
        }
        let is_common = common.contains(p);
        let is_cross = cross.contains(p);
        let category = if role(p) == Role::ProjectLeader {
            Category::ProjectLeader
        } else if is_cross {
            Category::CrossParticipant
        } else if is_common {
            Category::CommonOnly
        } else if reg.values().any(|r| matches!(r, Regularity::Regular)) {
            Category::RegularOnly
        } else {
            Category::OccasionalOnly
        };
        profiles.push(ParticipationProfile {
            participant: p.clone(),
            role: role(p),
            per_list_discussion_count: per_d,
            per_list_message_count: per_m,
            regularity: reg,
            is_common,
            is_cross,
            category,
        });
    }

    let mut involvement = Vec::new();
    for cat in InvolvementCategory::ALL {
        for (k, l) in list_ids.iter().enumerate() {
            let mut members = 0;
            let mut messages = 0;
            for prof in &profiles {
                let p = &prof.participant;
                let inside = match cat {
                    InvolvementCategory::ProjectLeader => prof.category == Category::ProjectLeader,
                    InvolvementCategory::RegularOnly => prof.category == Category::RegularOnly,
                    InvolvementCategory::OccasionalOnly => prof.category == Category::OccasionalOnly,
                    InvolvementCategory::CommonOnly => prof.category == Category::CommonOnly,
                    InvolvementCategory::CrossParticipant => prof.category == Category::CrossParticipant,
                    InvolvementCategory::AllCommon => common.contains(p),
                    InvolvementCategory::AllCross => cross.contains(p),
                    InvolvementCategory::AllRegular => {
                        matches!(regularities[k].get(p), Some(Regularity::Regular))
                    }
                    InvolvementCategory::AllOccasional => {
                        matches!(regularities[k].get(p), Some(Regularity::Occasional))
                    }
                };
                let m = msg_counts[k].get(p).copied().unwrap_or(0);
                if inside && m > 0 {
                    members += 1;
                    messages += m;
                }
            }
            involvement.push(InvolvementRow {
                category: cat,
                list_id: l.to_string(),
                members,
                messages,
                mean: if members > 0 {
                    Some(messages as f64 / members as f64)
                } else {
                    None
                },
            });
        }
    }

    let pooled_delay = if discs.len() >= 2 {
        let lo = discs.iter().map(|d| d.start).min().unwrap_or(0);
        let hi = discs.iter().map(|d| d.start).max().unwrap_or(0);
        Some((hi - lo) as f64 / (discs.len() - 1) as f64 / DAY)
    } else {
        None
    };

    // Design steps and timeline with the built-in lexicon.
    let lexicon = StageLexicon::design_steps();
    let mut design_steps: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut stage_of: BTreeMap<&str, String> = BTreeMap::new();
    for d in &discs {
        let mut stage = UNLABELED.to_string();
        'rules: for rule in &lexicon.stages {
            for kw in &rule.keywords {
                if d.key.contains(kw.as_str()) {
                    stage = rule.stage.clone();
                    break 'rules;
                }
            }
        }
        design_steps.entry(stage.clone()).or_default().push(d.id.to_string());
        stage_of.insert(d.id, stage);
    }
    let timeline: Vec<TimelineRecord> = discs
        .iter()
        .map(|d| {
            let mut with: Vec<String> = Vec::new();
            for p in &pairs {
                if p.discussion_a == d.id {
                    with.push(p.discussion_b.clone());
                }
                if p.discussion_b == d.id {
                    with.push(p.discussion_a.clone());
                }
            }
            with.sort();
            let stage = &stage_of[d.id];
            let group = (stage != UNLABELED).then(|| stage.clone());
            TimelineRecord {
                discussion_id: d.id.to_string(),
                list_id: d.list.to_string(),
                start: d.start,
                end: d.end,
                label: group.clone().unwrap_or_else(|| d.key.to_string()),
                group,
                parallel_with: with,
            }
        })
        .collect();

    // Quote edges straight from the planted sources.
    let sender_of: BTreeMap<MessageKey, &ParticipantId> = gt
        .discussions
        .iter()
        .flat_map(|d| {
            d.messages
                .iter()
                .map(move |m| (MessageKey::new(d.list_id.clone(), m.message_id.clone()), &m.sender))
        })
        .collect();
    let mut quote_edges: Vec<QuoteEdge> = gt
        .quotes
        .iter()
        .map(|q| {
            let quoter = sender_of[&MessageKey::new(q.list_id.clone(), q.message_id.clone())].clone();
            let quoted = sender_of[&q.source].clone();
            QuoteEdge {
                self_quote: quoter == quoted,
                quoter,
                quoted,
                quoter_message: q.message_id.clone(),
                quoted_message: Some(q.source.clone()),
                list_id: q.list_id.clone(),
                depth: q.depth,
                block_index: q.block_index,
            }
        })
        .collect();
    quote_edges.sort_by(|a, b| {
        (&a.list_id, &a.quoter_message, a.block_index).cmp(&(&b.list_id, &b.quoter_message, b.block_index))
    });

    let champions: BTreeSet<&str> = gt.champions.iter().map(String::as_str).collect();
    let category_of = |p: &ParticipantId| -> String {
        let r = role(p);
        let label = if r == Role::ProjectLeader {
            PROJECT_LEADER
        } else if champions.contains(p.as_str()) {
            USER_CHAMPION
        } else if cross.contains(p) {
            CROSS_PARTICIPANT
        } else if r == Role::Administrator || r == Role::Developer {
            ADMIN_DEVELOPER
        } else {
            USER
        };
        label.to_string()
    };
    let mut categories: BTreeMap<ParticipantId, String> =
        everyone.iter().map(|p| (p.clone(), category_of(p))).collect();
    for e in &quote_edges {
        categories.insert(e.quoter.clone(), category_of(&e.quoter));
        categories.insert(e.quoted.clone(), category_of(&e.quoted));
    }

    let thresholds = Thresholds::default();
    let labels = scheme_labels();
    let attraction_for = |list: Option<&str>| -> AttractionMetrics {
        let n = labels.len();
        let mut counts = vec![vec![0u64; n]; n];
        for e in &quote_edges {
            if list.is_some_and(|l| l != e.list_id) {
                continue;
            }
            let i = labels.iter().position(|l| *l == categories[&e.quoter]).expect("label");
            let j = labels.iter().position(|l| *l == categories[&e.quoted]).expect("label");
            counts[i][j] += 1;
        }
        let total: u64 = counts.iter().map(|r| r.iter().sum::<u64>()).sum();
        let rd = oracle_rd(&counts).map(|(expected, values)| RdMatrix {
            labels: labels.clone(),
            counts: counts.clone(),
            expected,
            values,
        });
        let row = |i: usize| counts[i].iter().sum::<u64>() as i128;
        let col = |j: usize| counts.iter().map(|r| r[j]).sum::<u64>() as i128;
        let mut edges: Vec<(i128, i128, AttractionEdge)> = Vec::new();
        if let Some(rd) = &rd {
            for i in 0..n {
                for j in 0..n {
                    if let Some(v) = rd.values[i][j] {
                        if v > thresholds.rd_threshold && counts[i][j] >= thresholds.rd_min_cell {
                            let den = row(i) * col(j);
                            edges.push((
                                counts[i][j] as i128 * total as i128 - den,
                                den,
                                AttractionEdge {
                                    from: labels[i].clone(),
                                    to: labels[j].clone(),
                                    weight: v,
                                    count: counts[i][j],
                                },
                            ));
                        }
                    }
                }
            }
        }
        // Larger exact deviation first, then labels.
        edges.sort_by(|a, b| {
            (b.0 * a.1)
                .cmp(&(a.0 * b.1))
                .then(a.2.from.cmp(&b.2.from))
                .then(a.2.to.cmp(&b.2.to))
        });
        let edges = edges.into_iter().map(|(_, _, e)| e).collect();
        AttractionMetrics {
            contingency: ContingencyTable {
                labels: labels.clone(),
                counts,
                total,
                unresolved: 0,
            },
            rd,
            edges,
        }
    };
    let attraction_pooled = attraction_for(None);
    let attraction_per_list: BTreeMap<String, AttractionMetrics> = list_ids
        .iter()
        .map(|l| (l.to_string(), attraction_for(Some(l))))
        .collect();

    // Contributions and revision counts.
    let mut contributors: BTreeSet<ParticipantId> = everyone.clone();
    for r in &gt.revisions {
        contributors.insert(r.committer.clone());
        contributors.extend(r.credited.iter().cloned());
    }
    let contributions = contributors
        .iter()
        .map(|p| {
            let tally = |space: Space, credited: bool| {
                gt.revisions
                    .iter()
                    .filter(|r| r.space == space)
                    .filter(|r| {
                        if credited {
                            r.credited.contains(p)
                        } else {
                            &r.committer == p
                        }
                    })
                    .count()
            };
            ContributionProfile {
                participant: p.clone(),
                role: role(p),
                discussion_messages: list_ids
                    .iter()
                    .enumerate()
                    .map(|(k, l)| (l.to_string(), msg_counts[k].get(p).copied().unwrap_or(0)))
                    .collect(),
                doc_revisions_effective: tally(Space::Documentation, false),
                doc_revisions_credited: tally(Space::Documentation, true),
                impl_revisions_effective: tally(Space::Implementation, false),
                impl_revisions_credited: tally(Space::Implementation, true),
            }
        })
        .collect();

    let mut revisions = RevisionMetrics::default();
    for space in [Space::Documentation, Space::Implementation] {
        let here: Vec<_> = gt.revisions.iter().filter(|r| r.space == space).collect();
        let mut counts: BTreeMap<ParticipantId, usize> = BTreeMap::new();
        let mut credited: BTreeMap<ParticipantId, usize> = BTreeMap::new();
        for r in &here {
            *counts.entry(r.committer.clone()).or_default() += 1;
            for c in &r.credited {
                *credited.entry(c.clone()).or_default() += 1;
            }
        }
        let mut combined = counts.clone();
        for (p, c) in &credited {
            *combined.entry(p.clone()).or_default() += c;
        }
        let fractions = counts
            .iter()
            .map(|(p, &c)| (p.clone(), c as f64 / here.len() as f64))
            .collect();
        revisions.effective.insert(
            space,
            RevisionCounts {
                total: here.len(),
                counts,
                fractions,
            },
        );
        revisions.credited.insert(
            space,
            CreditCounts {
                total: here.len(),
                credited,
                combined,
            },
        );
    }

    MetricsBundle {
        schema_version: BUNDLE_SCHEMA.to_string(),
        corpora: vec![CorpusMetrics {
            name: gt.corpus.name.clone(),
            lists,
            common,
            parallel_pairs: pairs,
            cross,
            profiles,
            involvement,
            pooled_opening_delay_days: pooled_delay,
            design_steps,
            timeline,
            quote_edges,
            categories,
            attraction_pooled,
            attraction_per_list,
            contributions,
        }],
        revisions,
    }
}
