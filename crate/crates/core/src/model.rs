//! Canonical records shared by every analysis stage.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Canonical participant identity. Every message sender, quote endpoint and
/// revision committer is reduced to one of these.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub String);

impl ParticipantId {
    pub fn new(name: impl Into<String>) -> Self {
        ParticipantId(name.into())
    }

    /// Placeholder endpoint for quotations whose source could not be found.
    pub fn unresolved() -> Self {
        ParticipantId("(unresolved)".to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    ProjectLeader,
    Administrator,
    Developer,
    User,
    #[default]
    Unknown,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::ProjectLeader => "ProjectLeader",
            Role::Administrator => "Administrator",
            Role::Developer => "Developer",
            Role::User => "User",
            Role::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

/// One known way a participant signs messages or commits.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Alias {
    pub name: String,
    #[serde(default)]
    pub email: String,
}

/// A participant together with its known aliases and community role.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub aliases: BTreeSet<Alias>,
    pub role: Role,
    /// Set when the sender header could not be parsed into a name or address.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unparsed: bool,
}

/// Messages are unique per list: a message crossposted to both lists is kept
/// once in each.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageKey {
    pub list_id: String,
    pub message_id: String,
}

impl MessageKey {
    pub fn new(list_id: impl Into<String>, message_id: impl Into<String>) -> Self {
        MessageKey {
            list_id: list_id.into(),
            message_id: message_id.into(),
        }
    }
}

impl fmt::Display for MessageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.list_id, self.message_id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub message_id: String,
    pub list_id: String,
    pub sender_raw: String,
    pub sender: ParticipantId,
    pub date: Timestamp,
    pub subject_raw: String,
    pub in_reply_to: Option<String>,
    pub references: Vec<String>,
    pub body: String,
    /// Byte offset of the mbox separator line this message was read from.
    pub offset: u64,
}

impl Message {
    pub fn key(&self) -> MessageKey {
        MessageKey::new(self.list_id.clone(), self.message_id.clone())
    }

    /// Ordering used everywhere a deterministic chronological order is needed.
    pub fn order_key(&self) -> (Timestamp, &str, &str) {
        (self.date, &self.list_id, &self.message_id)
    }

    /// Parent ids, nearest first: In-Reply-To then References newest to oldest.
    pub fn ancestor_ids(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        if let Some(p) = &self.in_reply_to {
            out.push(p);
        }
        for r in self.references.iter().rev() {
            if !out.contains(&r.as_str()) {
                out.push(r);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Space {
    Documentation,
    Implementation,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Documentation => f.write_str("Documentation"),
            Space::Implementation => f.write_str("Implementation"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionRecord {
    pub revision_id: String,
    pub space: Space,
    pub path: String,
    pub committer: ParticipantId,
    pub date: Timestamp,
    pub log_message: String,
    /// Never contains the committer.
    pub credited: BTreeSet<ParticipantId>,
}

/// A non-fatal problem found while reading input. Parsing continues.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub source: String,
    pub offset: Option<u64>,
    pub message_id: Option<String>,
    pub reason: String,
}

impl Diagnostic {
    pub fn new(source: impl Into<String>, reason: impl Into<String>) -> Self {
        Diagnostic {
            source: source.into(),
            offset: None,
            message_id: None,
            reason: reason.into(),
        }
    }

    pub fn at(mut self, offset: u64) -> Self {
        self.offset = Some(offset);
        self
    }

    pub fn for_message(mut self, id: impl Into<String>) -> Self {
        self.message_id = Some(id.into());
        self
    }
}
