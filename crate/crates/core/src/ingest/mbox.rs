//! mbox archive reader.
//!
//! Messages are delimited by `From ` separator lines at the start of the
//! stream or after an empty line. mboxrd escaping (`>From `) is undone in
//! bodies. A message that cannot be read is skipped with a diagnostic; it
//! never aborts the file.

use std::collections::HashSet;
use std::io::Read;

use chrono::DateTime;
use mailparse::{MailHeaderMap, ParsedMail};

use crate::error::IngestError;
use crate::ingest::identity::{resolve_identity, Roster};
use crate::model::{Diagnostic, Message, Timestamp};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MboxParse {
    pub messages: Vec<Message>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses an mbox stream with no roster; senders resolve to fresh identities.
pub fn parse_mbox<R: Read>(stream: R, list_id: &str) -> Result<MboxParse, IngestError> {
    parse_mbox_with_roster(stream, list_id, &Roster::empty())
}

pub fn parse_mbox_with_roster<R: Read>(
    mut stream: R,
    list_id: &str,
    roster: &Roster,
) -> Result<MboxParse, IngestError> {
    if list_id.trim().is_empty() {
        return Err(IngestError::EmptyListId);
    }
    let mut data = Vec::new();
    stream.read_to_end(&mut data).map_err(|source| IngestError::Io {
        what: format!("mbox stream for {list_id}"),
        source,
    })?;

    let entries = split_entries(&data);
    let mut out = MboxParse::default();
    if entries.is_empty() {
        if data.iter().any(|b| !b.is_ascii_whitespace()) {
            return Err(IngestError::NotMbox);
        }
        return Ok(out);
    }
    if data[..entries[0].0].iter().any(|b| !b.is_ascii_whitespace()) {
        out.diagnostics
            .push(Diagnostic::new(list_id, "content before first separator line ignored").at(0));
    }

    let mut seen: HashSet<String> = HashSet::new();
    for (offset, raw) in entries {
        let unescaped = unescape_from_lines(raw);
        match parse_entry(&unescaped, list_id, offset as u64, roster) {
            Ok(msg) => {
                if !seen.insert(msg.message_id.clone()) {
                    out.diagnostics.push(
                        Diagnostic::new(list_id, "duplicate Message-ID, later copy skipped")
                            .at(offset as u64)
                            .for_message(msg.message_id),
                    );
                    continue;
                }
                out.messages.push(msg);
            }
            Err(r) => {
                let mut d = Diagnostic::new(list_id, r.reason).at(offset as u64);
                if let Some(id) = r.message_id {
                    d = d.for_message(id);
                }
                out.diagnostics.push(d);
            }
        }
    }
    Ok(out)
}

/// Deterministic id for messages without a Message-ID header.
pub fn synthetic_message_id(list_id: &str, offset: u64) -> String {
    format!("synthetic.{offset}@{list_id}.invalid")
}

/// Returns (separator offset, message bytes after the separator line).
fn split_entries(data: &[u8]) -> Vec<(usize, &[u8])> {
    let mut starts: Vec<(usize, usize)> = Vec::new();
    let mut pos = 0;
    let mut prev_blank = true;
    while pos < data.len() {
        let end = data[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(data.len(), |i| pos + i + 1);
        let line = &data[pos..end];
        if prev_blank && line.starts_with(b"From ") {
            starts.push((pos, end));
        }
        prev_blank = line.iter().all(|b| *b == b'\n' || *b == b'\r');
        pos = end;
    }
    let mut out = Vec::with_capacity(starts.len());
    for (i, &(sep, body_start)) in starts.iter().enumerate() {
        let stop = starts.get(i + 1).map_or(data.len(), |next| next.0);
        out.push((sep, &data[body_start..stop]));
    }
    out
}

fn unescape_from_lines(raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(raw.len());
    for line in raw.split_inclusive(|&b| b == b'\n') {
        let gts = line.iter().take_while(|&&b| b == b'>').count();
        if gts > 0 && line[gts..].starts_with(b"From ") {
            out.extend_from_slice(&line[1..]);
        } else {
            out.extend_from_slice(line);
        }
    }
    out
}

pub(crate) fn parse_date(value: &str) -> Option<Timestamp> {
    let v = value.trim();
    if let Ok(dt) = DateTime::parse_from_rfc2822(v) {
        return Some(dt.timestamp());
    }
    // Strip a trailing "(PDT)" style comment and retry leniently.
    let v = v.split('(').next().unwrap_or(v).trim();
    if let Ok(dt) = DateTime::parse_from_rfc2822(v) {
        return Some(dt.timestamp());
    }
    // mailparse returns 0 for strings it walks past without finding a date.
    match mailparse::dateparse(v) {
        Ok(ts) if ts >= 86_400 && v.chars().any(|c| c.is_ascii_digit()) => Some(ts),
        _ => None,
    }
}

fn extract_ids(value: &str) -> Vec<String> {
    let mut ids = Vec::new();
    let mut rest = value;
    while let Some(open) = rest.find('<') {
        match rest[open + 1..].find('>') {
            Some(close) => {
                let id = rest[open + 1..open + 1 + close].trim();
                if !id.is_empty() {
                    ids.push(id.to_string());
                }
                rest = &rest[open + 1 + close + 1..];
            }
            None => break,
        }
    }
    if ids.is_empty() {
        ids = value.split_whitespace().map(str::to_string).collect();
    }
    ids
}

fn collect_text(part: &ParsedMail, plain: &mut Vec<String>, other: &mut Vec<String>) {
    if !part.subparts.is_empty() {
        for sub in &part.subparts {
            collect_text(sub, plain, other);
        }
        return;
    }
    let disposition = part.get_content_disposition();
    if disposition.disposition == mailparse::DispositionType::Attachment {
        return;
    }
    let mime = part.ctype.mimetype.to_ascii_lowercase();
    if !mime.starts_with("text/") {
        return;
    }
    let text = part
        .get_body()
        .unwrap_or_else(|_| String::from_utf8_lossy(part.get_body_raw().unwrap_or_default().as_slice()).into_owned());
    if mime == "text/plain" {
        plain.push(text);
    } else {
        other.push(text);
    }
}

/// A rejected entry: why, plus its Message-ID when one could be read.
struct Rejection {
    reason: String,
    message_id: Option<String>,
}

impl From<String> for Rejection {
    fn from(reason: String) -> Self {
        Rejection {
            reason,
            message_id: None,
        }
    }
}

fn parse_entry(raw: &[u8], list_id: &str, offset: u64, roster: &Roster) -> Result<Message, Rejection> {
    if !raw.contains(&b':') {
        return Err(String::from("no header fields found").into());
    }
    let parsed = mailparse::parse_mail(raw).map_err(|e| format!("unparseable message: {e}"))?;
    let headers = parsed.get_headers();

    let declared_id = headers
        .get_first_value("Message-ID")
        .and_then(|v| extract_ids(&v).into_iter().next())
        .filter(|v| !v.is_empty());
    let reject = |reason: String| Rejection {
        reason,
        message_id: declared_id.clone(),
    };
    let from = headers
        .get_first_value("From")
        .filter(|v| !v.trim().is_empty())
        .ok_or_else(|| reject("missing From header".into()))?;
    let date_value = headers
        .get_first_value("Date")
        .ok_or_else(|| reject("missing Date header".into()))?;
    let date = parse_date(&date_value).ok_or_else(|| reject(format!("invalid Date header {date_value:?}")))?;

    let message_id = declared_id
        .clone()
        .unwrap_or_else(|| synthetic_message_id(list_id, offset));
    let in_reply_to = headers
        .get_first_value("In-Reply-To")
        .and_then(|v| extract_ids(&v).into_iter().next());
    let references = headers
        .get_first_value("References")
        .map(|v| extract_ids(&v))
        .unwrap_or_default();
    let subject_raw = headers.get_first_value("Subject").unwrap_or_default();

    let mut plain = Vec::new();
    let mut other = Vec::new();
    collect_text(&parsed, &mut plain, &mut other);
    let parts = if plain.is_empty() { other } else { plain };
    let body = parts.join("\n").replace("\r\n", "\n");

    let sender = resolve_identity(&from, roster).id;
    Ok(Message {
        message_id,
        list_id: list_id.to_string(),
        sender_raw: from,
        sender,
        date,
        subject_raw,
        in_reply_to,
        references,
        body,
        offset,
    })
}
