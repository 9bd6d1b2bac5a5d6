//! Thread reconstruction: reply headers first, normalized-subject fallback
//! within a bounded time window.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::ArgumentError;
use crate::ingest::CorpusSelection;
use crate::model::{Diagnostic, Message, MessageKey, ParticipantId, Timestamp, SECONDS_PER_DAY};

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*(?:(?:re|fwd?|aw|wg|sv|vs|antw|rif|tr)\s*(?:\[\d+\]|\(\d+\))?\s*:|\[[^\]]*\])\s*")
            .expect("static regex")
    })
}

/// Strips leading reply/forward markers and bracketed list tags, collapses
/// whitespace and lowercases. Idempotent.
pub fn normalize_subject(subject_raw: &str) -> String {
    let mut s = subject_raw.to_lowercase();
    loop {
        let stripped = match marker_re().find(&s) {
            Some(m) if m.end() > 0 => s[m.end()..].to_string(),
            _ => break,
        };
        s = stripped;
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadedMessage {
    pub message_id: String,
    pub sender: ParticipantId,
    pub date: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discussion {
    pub discussion_id: String,
    pub list_id: String,
    pub subject_key: String,
    /// Date-sorted.
    pub messages: Vec<ThreadedMessage>,
    pub participants: BTreeSet<ParticipantId>,
    pub start: Timestamp,
    pub end: Timestamp,
    /// (child, parent) message ids; every parent precedes its child.
    pub reply_edges: Vec<(String, String)>,
}

impl Discussion {
    pub fn contains(&self, message_id: &str) -> bool {
        self.messages.iter().any(|m| m.message_id == message_id)
    }

    pub fn message_count_of(&self, who: &ParticipantId) -> usize {
        self.messages.iter().filter(|m| &m.sender == who).count()
    }
}

/// Record written to the discussion index file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscussionIndexRecord {
    pub discussion_id: String,
    pub list_id: String,
    pub subject_key: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub n_messages: usize,
    pub participants: BTreeSet<ParticipantId>,
}

impl From<&Discussion> for DiscussionIndexRecord {
    fn from(d: &Discussion) -> Self {
        DiscussionIndexRecord {
            discussion_id: d.discussion_id.clone(),
            list_id: d.list_id.clone(),
            subject_key: d.subject_key.clone(),
            start: d.start,
            end: d.end,
            n_messages: d.messages.len(),
            participants: d.participants.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreadingOptions {
    /// `None` disables the subject fallback.
    pub fallback_window_days: Option<u32>,
}

impl Default for ThreadingOptions {
    fn default() -> Self {
        ThreadingOptions {
            fallback_window_days: Some(14),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Threading {
    pub discussions: Vec<Discussion>,
    pub diagnostics: Vec<Diagnostic>,
}

/// (min date, max date) over the discussion's messages.
pub fn discussion_interval(d: &Discussion) -> (Timestamp, Timestamp) {
    let start = d.messages.iter().map(|m| m.date).min().unwrap_or(d.start);
    let end = d.messages.iter().map(|m| m.date).max().unwrap_or(d.end);
    (start, end)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Keep the earliest message as representative.
        if ra < rb {
            self.0[rb] = ra;
        } else if rb < ra {
            self.0[ra] = rb;
        }
    }
}

/// Groups the selected messages into discussions.
pub fn build_discussions(
    selection: &CorpusSelection,
    all_messages: &[Message],
    options: &ThreadingOptions,
) -> Result<Threading, ArgumentError> {
    let index: HashMap<MessageKey, &Message> = all_messages.iter().map(|m| (m.key(), m)).collect();
    let mut per_list: BTreeMap<&str, Vec<&Message>> = BTreeMap::new();
    for key in &selection.messages {
        let m = index
            .get(key)
            .ok_or_else(|| ArgumentError::UnresolvedMessage(key.to_string()))?;
        per_list.entry(key.list_id.as_str()).or_default().push(m);
    }

    let mut out = Threading::default();
    for (list_id, mut msgs) in per_list {
        msgs.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        thread_list(list_id, &msgs, options, &mut out);
    }
    out.discussions
        .sort_by(|a, b| (&a.list_id, a.start, &a.discussion_id).cmp(&(&b.list_id, b.start, &b.discussion_id)));
    Ok(out)
}

fn thread_list(list_id: &str, msgs: &[&Message], options: &ThreadingOptions, out: &mut Threading) {
    let n = msgs.len();
    let pos: HashMap<&str, usize> = msgs
        .iter()
        .enumerate()
        .map(|(i, m)| (m.message_id.as_str(), i))
        .collect();

    let mut uf = UnionFind((0..n).collect());
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for (i, m) in msgs.iter().enumerate() {
        for id in m.ancestor_ids() {
            if let Some(&j) = pos.get(id) {
                if j == i {
                    continue;
                }
                uf.union(i, j);
                if parent[i].is_none() {
                    parent[i] = Some(j);
                }
            }
        }
    }

    // Break parent cycles at the edge whose child is oldest.
    let mut state = vec![0u8; n]; // 0 unvisited, 1 on current walk, 2 done
    for start in 0..n {
        let mut walk = Vec::new();
        let mut cur = Some(start);
        while let Some(c) = cur {
            match state[c] {
                2 => break,
                1 => {
                    let cycle_from = walk.iter().position(|&w| w == c).unwrap_or(0);
                    let oldest = *walk[cycle_from..].iter().min().unwrap_or(&c);
                    let removed = parent[oldest].take();
                    out.diagnostics.push(
                        Diagnostic::new(
                            list_id,
                            format!(
                                "reference cycle broken at edge {} -> {}",
                                msgs[oldest].message_id,
                                removed.map(|p| msgs[p].message_id.as_str()).unwrap_or("?")
                            ),
                        )
                        .for_message(msgs[oldest].message_id.clone()),
                    );
                    break;
                }
                _ => {
                    state[c] = 1;
                    walk.push(c);
                    cur = parent[c];
                }
            }
        }
        for w in walk {
            state[w] = 2;
        }
    }
    for (i, p) in parent.iter_mut().enumerate() {
        if let Some(j) = *p {
            if j > i {
                out.diagnostics.push(
                    Diagnostic::new(list_id, "reply parent dated after child; edge dropped")
                        .for_message(msgs[i].message_id.clone()),
                );
                *p = None;
            }
        }
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        components.entry(root).or_default().push(i);
    }

    // Components in order of their earliest message; subject fallback joins a
    // component to the latest-ending open discussion with the same key.
    struct Group {
        key: String,
        end: Timestamp,
        members: Vec<usize>,
    }
    let window = options.fallback_window_days.map(|d| i64::from(d) * SECONDS_PER_DAY);
    let mut groups: Vec<Group> = Vec::new();
    for (first, members) in components {
        let key = normalize_subject(&msgs[first].subject_raw);
        let start = msgs[first].date;
        let end = members.iter().map(|&i| msgs[i].date).max().unwrap_or(start);
        let target = window.and_then(|w| {
            groups
                .iter()
                .enumerate()
                .filter(|(_, g)| g.key == key && start - g.end <= w)
                .max_by_key(|(i, g)| (g.end, std::cmp::Reverse(*i)))
                .map(|(i, _)| i)
        });
        match target {
            Some(t) => {
                groups[t].members.extend(members);
                groups[t].end = groups[t].end.max(end);
            }
            None => groups.push(Group { key, end, members }),
        }
    }

    for mut g in groups {
        g.members.sort_unstable();
        let first = msgs[g.members[0]];
        let member_set: BTreeSet<usize> = g.members.iter().copied().collect();
        let messages: Vec<ThreadedMessage> = g
            .members
            .iter()
            .map(|&i| ThreadedMessage {
                message_id: msgs[i].message_id.clone(),
                sender: msgs[i].sender.clone(),
                date: msgs[i].date,
            })
            .collect();
        let reply_edges = g
            .members
            .iter()
            .filter_map(|&i| {
                parent[i]
                    .filter(|p| member_set.contains(p))
                    .map(|p| (msgs[i].message_id.clone(), msgs[p].message_id.clone()))
            })
            .collect();
        out.discussions.push(Discussion {
            discussion_id: format!("{list_id}:{}", first.message_id),
            list_id: list_id.to_string(),
            subject_key: g.key,
            participants: messages.iter().map(|m| m.sender.clone()).collect(),
            start: messages.first().map_or(0, |m| m.date),
            end: messages.last().map_or(0, |m| m.date),
            messages,
            reply_edges,
        });
    }
}
