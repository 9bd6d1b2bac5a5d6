//! Sender parsing and roster-based identity resolution.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::model::{Alias, Participant, ParticipantId, Role};

/// Name and address pulled out of a From header or revision author field.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ParsedSender {
    pub name: Option<String>,
    pub email: Option<String>,
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn clean_name(s: &str) -> Option<String> {
    let s = s.trim().trim_matches(|c| c == '"' || c == '\'').trim();
    let s = collapse_ws(s);
    (!s.is_empty()).then_some(s)
}

/// Accepts "a@b.c" and the pipermail-obfuscated "a at b.c".
fn clean_email(s: &str) -> Option<String> {
    let s = s.trim().trim_matches(|c| c == '<' || c == '>').trim();
    let s = if !s.contains('@') && s.contains(" at ") {
        s.replacen(" at ", "@", 1)
    } else {
        s.to_string()
    };
    let s = s.to_lowercase();
    let valid = !s.is_empty()
        && !s.contains(char::is_whitespace)
        && matches!(s.split_once('@'), Some((local, domain)) if !local.is_empty() && !domain.is_empty());
    valid.then_some(s)
}

pub(crate) fn name_key(name: &str) -> String {
    collapse_ws(name).to_lowercase()
}

/// Parses `Name <addr>`, `addr (Name)` and bare-address forms.
/// Returns `None` when no address can be found.
pub fn parse_sender(raw: &str) -> Option<ParsedSender> {
    let raw = raw.trim();
    if let (Some(open), Some(close)) = (raw.find('<'), raw.rfind('>')) {
        if open < close {
            let email = clean_email(&raw[open + 1..close])?;
            let name = clean_name(&raw[..open]).or_else(|| clean_name(&raw[close + 1..]));
            return Some(ParsedSender {
                name,
                email: Some(email),
            });
        }
        return None;
    }
    if let (Some(open), Some(close)) = (raw.find('('), raw.rfind(')')) {
        if open < close {
            let email = clean_email(&raw[..open])?;
            return Some(ParsedSender {
                name: clean_name(&raw[open + 1..close]),
                email: Some(email),
            });
        }
        return None;
    }
    clean_email(raw).map(|email| ParsedSender {
        name: None,
        email: Some(email),
    })
}

/// On-disk roster entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub canonical_name: String,
    #[serde(default)]
    pub role: Role,
    #[serde(default)]
    pub aliases: Vec<Alias>,
}

/// Known participants indexed by address and by display name.
#[derive(Clone, Debug, Default)]
pub struct Roster {
    entries: Vec<Participant>,
    by_email: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
    by_id: HashMap<ParticipantId, usize>,
}

impl Roster {
    pub fn empty() -> Self {
        Roster::default()
    }

    /// Builds the indexes; rejects rosters whose alias sets overlap.
    pub fn new(entries: Vec<RosterEntry>) -> Result<Self, IngestError> {
        let mut roster = Roster::default();
        for entry in entries {
            let canonical = collapse_ws(&entry.canonical_name);
            if canonical.is_empty() {
                return Err(IngestError::Roster("empty canonical_name".into()));
            }
            let idx = roster.entries.len();
            let id = ParticipantId::new(canonical.clone());
            if roster.by_id.insert(id.clone(), idx).is_some() {
                return Err(IngestError::Roster(format!("duplicate participant {canonical}")));
            }
            let mut names: BTreeSet<String> = BTreeSet::new();
            names.insert(name_key(&canonical));
            let mut emails: BTreeSet<String> = BTreeSet::new();
            let mut aliases = BTreeSet::new();
            for alias in entry.aliases {
                let name = collapse_ws(&alias.name);
                let email = alias.email.trim().to_lowercase();
                if !name.is_empty() {
                    names.insert(name_key(&name));
                }
                if !email.is_empty() {
                    emails.insert(email.clone());
                }
                aliases.insert(Alias { name, email });
            }
            for n in names {
                if let Some(&other) = roster.by_name.get(&n) {
                    return Err(IngestError::Roster(format!(
                        "name {n:?} shared by {} and {canonical}",
                        roster.entries[other].id
                    )));
                }
                roster.by_name.insert(n, idx);
            }
            for e in emails {
                if let Some(&other) = roster.by_email.get(&e) {
                    return Err(IngestError::Roster(format!(
                        "address {e:?} shared by {} and {canonical}",
                        roster.entries[other].id
                    )));
                }
                roster.by_email.insert(e, idx);
            }
            roster.entries.push(Participant {
                id,
                aliases,
                role: entry.role,
                unparsed: false,
            });
        }
        Ok(roster)
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self, IngestError> {
        let entries: Vec<RosterEntry> =
            serde_json::from_reader(reader).map_err(|e| IngestError::Roster(e.to_string()))?;
        Roster::new(entries)
    }

    pub fn to_entries(&self) -> Vec<RosterEntry> {
        self.entries
            .iter()
            .map(|p| RosterEntry {
                canonical_name: p.id.0.clone(),
                role: p.role,
                aliases: p.aliases.iter().cloned().collect(),
            })
            .collect()
    }

    pub fn participants(&self) -> &[Participant] {
        &self.entries
    }

    pub fn get(&self, id: &ParticipantId) -> Option<&Participant> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn role_of(&self, id: &ParticipantId) -> Role {
        self.get(id).map(|p| p.role).unwrap_or_default()
    }

    pub fn lookup_email(&self, email: &str) -> Option<&Participant> {
        self.by_email.get(&email.to_lowercase()).map(|&i| &self.entries[i])
    }

    pub fn lookup_name(&self, name: &str) -> Option<&Participant> {
        self.by_name.get(&name_key(name)).map(|&i| &self.entries[i])
    }

    /// Every display name and address local part that identifies a participant,
    /// used for crediting in revision logs.
    pub fn name_forms(&self) -> Vec<(String, ParticipantId)> {
        let mut out: Vec<(String, ParticipantId)> = self
            .by_name
            .iter()
            .map(|(n, &i)| (n.clone(), self.entries[i].id.clone()))
            .collect();
        out.sort();
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Maps a raw sender string onto a roster participant.
///
/// An address match wins over a display-name match. Senders that match
/// nothing get a fresh `Unknown` participant named after the parsed display
/// name (or address). Unparseable headers become a participant named by the
/// raw string, flagged `unparsed`.
pub fn resolve_identity(sender_raw: &str, roster: &Roster) -> Participant {
    match parse_sender(sender_raw) {
        Some(parsed) => {
            if let Some(p) = parsed.email.as_deref().and_then(|e| roster.lookup_email(e)) {
                return p.clone();
            }
            if let Some(p) = parsed.name.as_deref().and_then(|n| roster.lookup_name(n)) {
                return p.clone();
            }
            let email = parsed.email.unwrap_or_default();
            let canonical = parsed.name.clone().unwrap_or_else(|| email.clone());
            Participant {
                id: ParticipantId::new(canonical),
                aliases: BTreeSet::from([Alias {
                    name: parsed.name.unwrap_or_default(),
                    email,
                }]),
                role: Role::Unknown,
                unparsed: false,
            }
        }
        None => {
            // Bare handles ("rhettinger") and display names without an address.
            if let Some(p) = clean_name(sender_raw).and_then(|n| roster.lookup_name(&n)) {
                return p.clone();
            }
            let canonical = match clean_name(sender_raw) {
                Some(n) => n,
                None => "(anonymous)".to_string(),
            };
            Participant {
                id: ParticipantId::new(canonical),
                aliases: BTreeSet::new(),
                role: Role::Unknown,
                unparsed: true,
            }
        }
    }
}
