//! Archive ingestion: mbox parsing, identity resolution, revision logs and
//! corpus selection.

pub mod identity;
pub mod mbox;
pub mod revlog;
pub mod select;

pub use identity::{parse_sender, resolve_identity, ParsedSender, Roster, RosterEntry};
pub use mbox::{parse_mbox, parse_mbox_with_roster, synthetic_message_id, MboxParse};
pub use revlog::{parse_revision_log, CreditMatcher, RevisionLogEntry, RevisionParse, DEFAULT_CREDIT_PATTERNS};
pub use select::{select_corpus, CorpusSelection, KeywordMode};
