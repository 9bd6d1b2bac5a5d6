//! Newline-delimited revision log reader with credit extraction.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{ArgumentError, IngestError};
use crate::ingest::identity::{name_key, resolve_identity, Roster};
use crate::model::{Diagnostic, ParticipantId, RevisionRecord, Space, Timestamp};

/// Default cue templates for "committed on behalf of" log messages.
pub const DEFAULT_CREDIT_PATTERNS: &[&str] = &[
    "thanks to {name}",
    "{name}'s",
    "on behalf of {name}",
    "patch by {name}",
    "contributed by {name}",
    "from {name}",
];

/// One line of a revision log export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RevisionLogEntry {
    pub revision: String,
    pub space: Space,
    pub path: String,
    pub author: String,
    pub date: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RevisionParse {
    pub records: Vec<RevisionRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Compiled credit templates. Only roster names can be captured.
#[derive(Debug)]
pub struct CreditMatcher {
    patterns: Vec<Regex>,
}

fn literal_regex(text: &str) -> String {
    let mut out = String::new();
    let mut in_ws = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_ws {
                out.push_str(r"\s+");
            }
            in_ws = true;
        } else {
            in_ws = false;
            out.push_str(&regex::escape(&c.to_string()));
        }
    }
    out
}

impl CreditMatcher {
    pub fn new(patterns: &[String], roster: &Roster) -> Result<Self, ArgumentError> {
        let mut names: Vec<String> = roster.name_forms().into_iter().map(|(n, _)| n).collect();
        names.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        names.dedup();
        let mut compiled = Vec::new();
        for pattern in patterns {
            let parts: Vec<&str> = pattern.split("{name}").collect();
            if parts.len() != 2 {
                return Err(ArgumentError::Invalid(format!(
                    "credit pattern {pattern:?} must contain {{name}} exactly once"
                )));
            }
            if names.is_empty() {
                continue;
            }
            let alternation = names.iter().map(|n| literal_regex(n)).collect::<Vec<_>>().join("|");
            let source = format!(
                r"(?i){}\b(?P<name>{})\b{}",
                literal_regex(parts[0]),
                alternation,
                literal_regex(parts[1])
            );
            let re = Regex::new(&source).map_err(|e| ArgumentError::Invalid(e.to_string()))?;
            compiled.push(re);
        }
        Ok(CreditMatcher { patterns: compiled })
    }

    /// Roster participants referenced by any cue in `message`.
    pub fn credited(&self, message: &str, roster: &Roster) -> BTreeSet<ParticipantId> {
        let mut out = BTreeSet::new();
        for re in &self.patterns {
            for caps in re.captures_iter(message) {
                if let Some(p) = caps
                    .name("name")
                    .and_then(|m| roster.lookup_name(&name_key(m.as_str())))
                {
                    out.insert(p.id.clone());
                }
            }
        }
        out
    }
}

pub(crate) fn parse_iso_utc(value: &str) -> Option<Timestamp> {
    let v = value.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(v) {
        return Some(dt.timestamp());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(v, "%Y-%m-%dT%H:%M:%S") {
        return Some(dt.and_utc().timestamp());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(v, "%Y-%m-%d %H:%M:%S") {
        return Some(dt.and_utc().timestamp());
    }
    NaiveDate::parse_from_str(v, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

/// Reads one revision per line. Entries whose `space` differs from the
/// expected space, or which fail to parse, are skipped with a diagnostic.
pub fn parse_revision_log<R: Read>(
    stream: R,
    space: Space,
    credit_patterns: &[String],
    roster: &Roster,
) -> Result<RevisionParse, IngestError> {
    let matcher = CreditMatcher::new(credit_patterns, roster).map_err(|e| IngestError::Roster(e.to_string()))?;
    let source = format!("{space} log");
    let mut out = RevisionParse::default();
    for (lineno, line) in BufReader::new(stream).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            what: "revision log".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let diag = |reason: String| Diagnostic::new(source.clone(), reason).at(lineno as u64 + 1);
        let entry: RevisionLogEntry = match serde_json::from_str(&line) {
            Ok(e) => e,
            Err(e) => {
                out.diagnostics.push(diag(format!("malformed entry: {e}")));
                continue;
            }
        };
        if entry.space != space {
            out.diagnostics.push(diag(format!(
                "entry {} is in space {}, expected {space}",
                entry.revision, entry.space
            )));
            continue;
        }
        let Some(date) = parse_iso_utc(&entry.date) else {
            out.diagnostics.push(diag(format!(
                "entry {} has invalid date {:?}",
                entry.revision, entry.date
            )));
            continue;
        };
        let committer = resolve_identity(&entry.author, roster).id;
        let mut credited = matcher.credited(&entry.message, roster);
        credited.remove(&committer);
        out.records.push(RevisionRecord {
            revision_id: entry.revision,
            space: entry.space,
            path: entry.path,
            committer,
            date,
            log_message: entry.message,
            credited,
        });
    }
    Ok(out)
}
