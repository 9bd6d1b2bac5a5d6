//! Quotation extraction and attribution.
//!
//! A quoted line starts with optional whitespace and one or more `>`
//! markers. Runs of consecutive lines at equal depth form a block. Each
//! block is traced back to the earlier message whose own (unquoted) text
//! contains it, searching the reply chain first, then the discussion, then
//! the whole corpus.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::{resolve_identity, CorpusSelection, Roster};
use crate::model::{Message, MessageKey, ParticipantId, Timestamp};
use crate::thread::Discussion;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuoteOptions {
    pub min_chars: usize,
    pub min_tokens: usize,
    /// Token-overlap pass after exact containment fails.
    pub fuzzy: bool,
    pub fuzzy_overlap: f64,
}

impl Default for QuoteOptions {
    fn default() -> Self {
        QuoteOptions {
            min_chars: 20,
            min_tokens: 3,
            fuzzy: true,
            fuzzy_overlap: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteBlock {
    pub owner: String,
    pub depth: usize,
    /// Dequoted, whitespace-collapsed, lowercased.
    pub text: String,
    /// First and last body line (0-based, inclusive).
    pub line_span: (usize, usize),
    /// Name from an introducer line ("X wrote:") directly above the block.
    pub hint: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteEdge {
    pub quoter: ParticipantId,
    pub quoted: ParticipantId,
    pub quoter_message: String,
    pub quoted_message: Option<MessageKey>,
    pub list_id: String,
    pub depth: usize,
    /// Position of the block among the retained blocks of its message.
    pub block_index: usize,
    pub self_quote: bool,
}

impl QuoteEdge {
    pub fn resolved(&self) -> bool {
        self.quoted_message.is_some()
    }
}

pub fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Counts leading `>` markers (each optionally followed by one space).
pub fn quote_depth(line: &str) -> (usize, &str) {
    let mut rest = line.trim_start();
    let mut depth = 0;
    while let Some(r) = rest.strip_prefix('>') {
        depth += 1;
        rest = r.strip_prefix(' ').unwrap_or(r);
    }
    if depth == 0 {
        (0, line)
    } else {
        (depth, rest)
    }
}

fn hint_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^(?:on\s.*,\s*)?(?P<who>[^,]+?)\s+(?:wrote|writes|said|schrieb|a écrit)\s*:\s*$|^\[(?P<tag>[^\]]{1,60})\]\s*$|^quoting\s+(?P<q>.+?):\s*$",
        )
        .expect("static regex")
    })
}

/// Name carried by a quote-introducer line, if the line is one.
pub fn attribution_hint(line: &str) -> Option<String> {
    let caps = hint_re().captures(line.trim())?;
    let who = caps
        .name("who")
        .or_else(|| caps.name("tag"))
        .or_else(|| caps.name("q"))?;
    let who = who.as_str().trim();
    (!who.is_empty()).then(|| who.to_string())
}

struct Run {
    depth: usize,
    first: usize,
    last: usize,
    lines: Vec<String>,
    hint: Option<String>,
}

/// Splits a body into quote blocks, dropping those below the length floor
/// (a block survives with at least `min_chars` characters or at least
/// `min_tokens` tokens).
pub fn extract_quote_blocks(owner: &str, body: &str, options: &QuoteOptions) -> Vec<QuoteBlock> {
    let mut blocks = Vec::new();
    let mut run: Option<Run> = None;
    // (depth of introducer line, name)
    let mut pending_hint: Option<(usize, String)> = None;

    let flush = |run: &mut Option<Run>, blocks: &mut Vec<QuoteBlock>| {
        if let Some(r) = run.take() {
            let text = normalize_text(&r.lines.join(" "));
            if !text.is_empty()
                && (text.chars().count() >= options.min_chars || text.split(' ').count() >= options.min_tokens)
            {
                blocks.push(QuoteBlock {
                    owner: owner.to_string(),
                    depth: r.depth,
                    text,
                    line_span: (r.first, r.last),
                    hint: r.hint,
                });
            }
        }
    };

    for (i, line) in body.lines().enumerate() {
        let (depth, rest) = quote_depth(line);
        if let Some(name) = attribution_hint(rest) {
            flush(&mut run, &mut blocks);
            pending_hint = Some((depth, name));
            continue;
        }
        if depth == 0 {
            flush(&mut run, &mut blocks);
            if !line.trim().is_empty() {
                pending_hint = None;
            }
            continue;
        }
        match run.as_mut() {
            Some(r) if r.depth == depth => {
                r.last = i;
                r.lines.push(rest.to_string());
            }
            _ => {
                flush(&mut run, &mut blocks);
                let hint = match pending_hint.take() {
                    Some((hd, name)) if hd + 1 == depth => Some(name),
                    _ => None,
                };
                run = Some(Run {
                    depth,
                    first: i,
                    last: i,
                    lines: vec![rest.to_string()],
                    hint,
                });
            }
        }
    }
    flush(&mut run, &mut blocks);
    blocks
}

/// Unquoted text of a body, normalized.
pub fn own_text(body: &str) -> String {
    let lines: Vec<&str> = body.lines().filter(|l| quote_depth(l).0 == 0).collect();
    normalize_text(&lines.join(" "))
}

/// Messages of a corpus, indexed for attribution.
pub struct QuoteCorpus<'a> {
    messages: Vec<&'a Message>,
    own: Vec<String>,
    tokens: Vec<Vec<String>>,
    token_sets: Vec<HashSet<String>>,
    by_key: HashMap<MessageKey, usize>,
    by_id: HashMap<&'a str, Vec<usize>>,
}

impl<'a> QuoteCorpus<'a> {
    pub fn new(selection: &CorpusSelection, all_messages: &'a [Message]) -> Self {
        let mut messages: Vec<&Message> = all_messages.iter().filter(|m| selection.contains(&m.key())).collect();
        messages.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        let own: Vec<String> = messages.iter().map(|m| own_text(&m.body)).collect();
        let tokens: Vec<Vec<String>> = own
            .iter()
            .map(|t| t.split_whitespace().map(str::to_string).collect())
            .collect();
        let token_sets = tokens.iter().map(|t| t.iter().cloned().collect()).collect();
        let by_key = messages.iter().enumerate().map(|(i, m)| (m.key(), i)).collect();
        let mut by_id: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, m) in messages.iter().enumerate() {
            by_id.entry(m.message_id.as_str()).or_default().push(i);
        }
        QuoteCorpus {
            messages,
            own,
            tokens,
            token_sets,
            by_key,
            by_id,
        }
    }

    pub fn message(&self, key: &MessageKey) -> Option<&'a Message> {
        self.by_key.get(key).map(|&i| self.messages[i])
    }

    fn lookup(&self, list_id: &str, id: &str) -> Option<usize> {
        let hits = self.by_id.get(id)?;
        hits.iter()
            .copied()
            .find(|&i| self.messages[i].list_id == list_id)
            .or_else(|| hits.first().copied())
    }

    /// Candidate sources for a message, in search order: reply chain
    /// nearest first, then earlier discussion messages newest first, then
    /// earlier corpus messages newest first. All strictly earlier in time.
    fn candidates(&self, owner: usize, discussion: Option<&Discussion>) -> Vec<usize> {
        let o = self.messages[owner];
        let before = |i: usize| self.messages[i].date < o.date;
        let mut seen: HashSet<usize> = HashSet::from([owner]);
        let mut out = Vec::new();

        let mut cur = o;
        loop {
            let next = cur
                .ancestor_ids()
                .into_iter()
                .filter_map(|id| self.lookup(&cur.list_id, id))
                .find(|i| !seen.contains(i));
            match next {
                Some(i) => {
                    seen.insert(i);
                    if before(i) {
                        out.push(i);
                    }
                    cur = self.messages[i];
                }
                None => break,
            }
        }
        for id in o.ancestor_ids() {
            if let Some(i) = self.lookup(&o.list_id, id) {
                if seen.insert(i) && before(i) {
                    out.push(i);
                }
            }
        }
        if let Some(d) = discussion {
            let mut members: Vec<usize> = d
                .messages
                .iter()
                .filter_map(|m| {
                    self.by_key
                        .get(&MessageKey::new(d.list_id.clone(), m.message_id.clone()))
                        .copied()
                })
                .collect();
            members.sort_unstable();
            for &i in members.iter().rev() {
                if before(i) && seen.insert(i) {
                    out.push(i);
                }
            }
        }
        for i in (0..self.messages.len()).rev() {
            if before(i) && seen.insert(i) {
                out.push(i);
            }
        }
        out
    }

    fn fuzzy_match(
        &self,
        candidate: usize,
        block_tokens: &[&str],
        block_counts: &HashMap<&str, usize>,
        ratio: f64,
    ) -> bool {
        let n = block_tokens.len();
        if n == 0 {
            return false;
        }
        let need = (ratio * n as f64).ceil() as usize;
        let set = &self.token_sets[candidate];
        let present: usize = block_counts
            .iter()
            .filter(|(t, _)| set.contains(**t))
            .map(|(_, c)| *c)
            .sum();
        if present < need {
            return false;
        }
        let toks = &self.tokens[candidate];
        let w = (2 * n).min(toks.len());
        let mut window: HashMap<&str, usize> = HashMap::new();
        let mut overlap = 0usize;
        for (j, t) in toks.iter().enumerate() {
            let t = t.as_str();
            let want = block_counts.get(t).copied().unwrap_or(0);
            let have = window.entry(t).or_insert(0);
            if *have < want {
                overlap += 1;
            }
            *have += 1;
            if j >= w {
                let old = toks[j - w].as_str();
                let want = block_counts.get(old).copied().unwrap_or(0);
                let have = window.get_mut(old).expect("token in window");
                *have -= 1;
                if *have < want {
                    overlap -= 1;
                }
            }
            if overlap >= need {
                return true;
            }
        }
        false
    }

    fn first_match(&self, block: &QuoteBlock, candidates: &[usize], options: &QuoteOptions) -> Option<usize> {
        if let Some(&i) = candidates.iter().find(|&&i| self.own[i].contains(&block.text)) {
            return Some(i);
        }
        if !options.fuzzy {
            return None;
        }
        let toks: Vec<&str> = block.text.split(' ').collect();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &toks {
            *counts.entry(t).or_insert(0) += 1;
        }
        candidates
            .iter()
            .copied()
            .find(|&i| self.fuzzy_match(i, &toks, &counts, options.fuzzy_overlap))
    }
}

/// Finds the source message of `block`, or `None` when no earlier message
/// contains it. A hint naming a participant restricts the search to that
/// participant's messages first.
pub fn attribute_quote_block(
    block: &QuoteBlock,
    owner: &MessageKey,
    discussion: Option<&Discussion>,
    corpus: &QuoteCorpus<'_>,
    roster: &Roster,
    options: &QuoteOptions,
) -> Option<MessageKey> {
    let &o = corpus.by_key.get(owner)?;
    let candidates = corpus.candidates(o, discussion);
    if let Some(hint) = &block.hint {
        let hinted = hinted_participant(hint, roster);
        let restricted: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| corpus.messages[i].sender == hinted)
            .collect();
        if let Some(i) = corpus.first_match(block, &restricted, options) {
            return Some(corpus.messages[i].key());
        }
    }
    corpus
        .first_match(block, &candidates, options)
        .map(|i| corpus.messages[i].key())
}

fn hinted_participant(hint: &str, roster: &Roster) -> ParticipantId {
    if let Some(p) = roster.lookup_name(hint) {
        return p.id.clone();
    }
    resolve_identity(hint, roster).id
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuoteGraph {
    pub edges: Vec<QuoteEdge>,
}

impl QuoteGraph {
    pub fn unresolved_count(&self) -> usize {
        self.edges.iter().filter(|e| !e.resolved()).count()
    }

    /// Edges attributed to a source, as (quoter message, block index) → source.
    pub fn sources(&self) -> HashMap<(String, usize), Option<MessageKey>> {
        self.edges
            .iter()
            .map(|e| ((e.quoter_message.clone(), e.block_index), e.quoted_message.clone()))
            .collect()
    }
}

/// One edge per retained quote block over every discussion of the corpus.
pub fn build_quote_graph(
    selection: &CorpusSelection,
    discussions: &[Discussion],
    all_messages: &[Message],
    roster: &Roster,
    options: &QuoteOptions,
) -> QuoteGraph {
    let corpus = QuoteCorpus::new(selection, all_messages);
    let mut edges = Vec::new();
    for d in discussions {
        for tm in &d.messages {
            let key = MessageKey::new(d.list_id.clone(), tm.message_id.clone());
            let Some(m) = corpus.message(&key) else { continue };
            for (block_index, block) in extract_quote_blocks(&m.message_id, &m.body, options).iter().enumerate() {
                let source = attribute_quote_block(block, &key, Some(d), &corpus, roster, options);
                let quoted = source
                    .as_ref()
                    .and_then(|k| corpus.message(k))
                    .map(|s| s.sender.clone())
                    .unwrap_or_else(ParticipantId::unresolved);
                edges.push(QuoteEdge {
                    self_quote: source.is_some() && quoted == m.sender,
                    quoter: m.sender.clone(),
                    quoted,
                    quoter_message: m.message_id.clone(),
                    quoted_message: source,
                    list_id: m.list_id.clone(),
                    depth: block.depth,
                    block_index,
                });
            }
        }
    }
    QuoteGraph { edges }
}

/// Checks that every resolved edge points strictly backward in time.
pub fn temporally_sane(graph: &QuoteGraph, dates: &HashMap<MessageKey, Timestamp>) -> bool {
    graph.edges.iter().all(|e| match &e.quoted_message {
        None => true,
        Some(src) => {
            let owner = MessageKey::new(e.list_id.clone(), e.quoter_message.clone());
            match (dates.get(src), dates.get(&owner)) {
                (Some(s), Some(o)) => s < o,
                _ => false,
            }
        }
    })
}

/// Wraps text in `depth` levels of `> ` markers, one output line per input line.
pub fn quote_wrap(text: &str, depth: usize) -> String {
    let prefix = "> ".repeat(depth);
    text.lines()
        .map(|l| format!("{prefix}{l}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{select_corpus, KeywordMode};
    use crate::thread::{build_discussions, ThreadingOptions};
    use std::collections::BTreeSet;

    fn opts() -> QuoteOptions {
        QuoteOptions::default()
    }

    #[test]
    fn single_quote_block() {
        let b = extract_quote_blocks("m", "> foo bar baz quux line\nmy reply", &opts());
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].depth, 1);
        assert_eq!(b[0].text, "foo bar baz quux line");
        assert_eq!(b[0].line_span, (0, 0));
    }

    #[test]
    fn nested_runs_split_by_depth() {
        let b = extract_quote_blocks("m", ">> inner old text here\n> outer reply text here", &opts());
        let depths: Vec<usize> = b.iter().map(|b| b.depth).collect();
        assert_eq!(depths, [2, 1]);
        assert_eq!(b[0].text, "inner old text here");
        assert_eq!(b[1].line_span, (1, 1));
    }

    #[test]
    fn short_quote_discarded() {
        assert!(extract_quote_blocks("m", "> ok", &opts()).is_empty());
        assert!(extract_quote_blocks("m", "> ok sure\n>\n> ", &opts()).is_empty());
        // Long single token survives on length alone.
        assert_eq!(
            extract_quote_blocks("m", "> abcdefghijklmnopqrstuvwxyz", &opts()).len(),
            1
        );
    }

    #[test]
    fn marker_spacing_variants() {
        assert_eq!(quote_depth("> > x"), (2, "x"));
        assert_eq!(quote_depth(">>x"), (2, "x"));
        assert_eq!(quote_depth("   > x"), (1, "x"));
        assert_eq!(quote_depth("x > y").0, 0);
    }

    #[test]
    fn introducer_lines_are_hints() {
        let body =
            "Tim Peters wrote:\n> the decimal module should round half even\n> by default in all contexts\nI disagree.";
        let b = extract_quote_blocks("m", body, &opts());
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].hint.as_deref(), Some("Tim Peters"));
        assert_eq!(
            attribution_hint("On Mon, 5 Jan 2004, Guido van Rossum wrote:").as_deref(),
            Some("Guido van Rossum")
        );
        assert_eq!(attribution_hint("[Tim]").as_deref(), Some("Tim"));
        assert_eq!(attribution_hint("this is ordinary text"), None);
    }

    fn message(id: &str, sender: &str, hour: i64, parent: Option<&str>, refs: &[&str], body: &str) -> Message {
        Message {
            message_id: id.into(),
            list_id: "py-dev".into(),
            sender_raw: String::new(),
            sender: ParticipantId::new(sender),
            date: 1_000_000 + hour * 3600,
            subject_raw: "decimal".into(),
            in_reply_to: parent.map(str::to_string),
            references: refs.iter().map(|s| s.to_string()).collect(),
            body: body.into(),
            offset: 0,
        }
    }

    fn graph_of(msgs: &[Message]) -> QuoteGraph {
        let sel = select_corpus(
            "c",
            msgs,
            &BTreeSet::from(["decimal".to_string()]),
            0,
            i64::MAX,
            KeywordMode::Substring,
        )
        .unwrap();
        let t = build_discussions(&sel, msgs, &ThreadingOptions::default()).unwrap();
        build_quote_graph(&sel, &t.discussions, msgs, &Roster::empty(), &opts())
    }

    #[test]
    fn parent_and_grandparent_attribution() {
        let a_text = "we need a fixed point type for money computations";
        let b_text = "a decimal type would solve the money problem too";
        let msgs = vec![
            message("A", "alice", 0, None, &[], a_text),
            message("B", "bob", 1, Some("A"), &["A"], &format!("> {a_text}\n{b_text}")),
            message(
                "C",
                "carol",
                2,
                Some("B"),
                &["A", "B"],
                &format!(">> {a_text}\n> {b_text}\nagreed"),
            ),
        ];
        let g = graph_of(&msgs);
        assert_eq!(g.edges.len(), 3);
        let c_edges: Vec<&QuoteEdge> = g.edges.iter().filter(|e| e.quoter_message == "C").collect();
        assert_eq!(c_edges.len(), 2);
        assert_eq!(c_edges[0].depth, 2);
        assert_eq!(c_edges[0].quoted_message, Some(MessageKey::new("py-dev", "A")));
        assert_eq!(c_edges[0].quoted.as_str(), "alice");
        assert_eq!(c_edges[1].quoted_message, Some(MessageKey::new("py-dev", "B")));
        let b_edge = g.edges.iter().find(|e| e.quoter_message == "B").unwrap();
        assert_eq!(b_edge.quoted.as_str(), "alice");
        assert_eq!(b_edge.quoter.as_str(), "bob");
    }

    #[test]
    fn unknown_source_is_unresolved() {
        let msgs = vec![
            message("A", "alice", 0, None, &[], "original words about decimal"),
            message(
                "B",
                "bob",
                1,
                Some("A"),
                &["A"],
                "> text that nobody ever wrote before\nreply",
            ),
        ];
        let g = graph_of(&msgs);
        assert_eq!(g.edges.len(), 1);
        assert!(!g.edges[0].resolved());
        assert_eq!(g.edges[0].quoted, ParticipantId::unresolved());
        assert_eq!(g.unresolved_count(), 1);
    }

    #[test]
    fn fuzzy_pass_recovers_truncated_middle_line() {
        let a_text = "alpha bravo charlie delta echo foxtrot\ngolf hotel india juliet kilo lima\nmike november oscar papa quebec romeo";
        let quoted =
            "> alpha bravo charlie delta echo foxtrot\n> golf hotel ind\n> mike november oscar papa quebec romeo";
        let msgs = vec![
            message("A", "alice", 0, None, &[], a_text),
            message("B", "bob", 1, Some("A"), &["A"], quoted),
        ];
        assert_eq!(
            graph_of(&msgs).edges[0].quoted_message,
            Some(MessageKey::new("py-dev", "A"))
        );
        let mut strict = opts();
        strict.fuzzy = false;
        let sel = select_corpus(
            "c",
            &msgs,
            &BTreeSet::from(["decimal".to_string()]),
            0,
            i64::MAX,
            KeywordMode::Substring,
        )
        .unwrap();
        let t = build_discussions(&sel, &msgs, &ThreadingOptions::default()).unwrap();
        let g = build_quote_graph(&sel, &t.discussions, &msgs, &Roster::empty(), &strict);
        assert!(!g.edges[0].resolved());
    }

    #[test]
    fn message_quoting_two_ancestors_gives_two_edges() {
        let a = "first proposal text about the decimal context";
        let b = "second opinion regarding rounding modes here";
        let msgs = vec![
            message("A", "alice", 0, None, &[], a),
            message("B", "bob", 1, Some("A"), &["A"], b),
            message(
                "C",
                "carol",
                2,
                Some("B"),
                &["A", "B"],
                &format!("> {a}\n\nyes\n\n> {b}\nno"),
            ),
        ];
        let g = graph_of(&msgs);
        let c: Vec<_> = g.edges.iter().filter(|e| e.quoter_message == "C").collect();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].quoted.as_str(), "alice");
        assert_eq!(c[1].quoted.as_str(), "bob");
    }

    #[test]
    fn self_quotes_flagged() {
        let a = "my own earlier statement about decimals";
        let msgs = vec![
            message("A", "alice", 0, None, &[], a),
            message("B", "alice", 1, Some("A"), &["A"], &format!("> {a}\nfollow-up")),
        ];
        let g = graph_of(&msgs);
        assert!(g.edges[0].self_quote);
    }

    #[test]
    fn hint_restricts_candidates() {
        let shared = "the same sentence posted by two different people";
        let msgs = vec![
            message("A", "alice", 0, None, &[], shared),
            message("B", "bob", 1, Some("A"), &["A"], shared),
            message(
                "C",
                "carol",
                2,
                Some("B"),
                &["A", "B"],
                &format!("alice wrote:\n> {shared}\nok"),
            ),
        ];
        let g = graph_of(&msgs);
        let e = g.edges.iter().find(|e| e.quoter_message == "C").unwrap();
        assert_eq!(e.quoted.as_str(), "alice");
    }

    #[test]
    fn empty_corpus_no_edges() {
        assert!(graph_of(&[]).edges.is_empty());
    }
}
