//! Synthetic two-list corpora with planted ground truth, and a brute-force
//! oracle over that ground truth.
//!
//! Generation uses ChaCha8 seeded from a `u64`, so a seed yields the same
//! bytes on every platform.

mod generate;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Orientation;
use crate::error::{ArgumentError, CliError};
use crate::ingest::RosterEntry;
use crate::model::{MessageKey, ParticipantId, Role, Space, Timestamp};
use crate::store::write_atomic;

pub use generate::generate_corpus;
pub use oracle::oracle_metrics;

pub const USER_LIST: &str = "synth-list";
pub const DEV_LIST: &str = "synth-dev";
pub const KEYWORD: &str = "decimal";
pub const CORPUS_NAME: &str = "synthetic";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub n_participants_per_role: BTreeMap<Role, usize>,
    pub n_discussions_per_list: usize,
    pub parallel_pair_count: usize,
    pub planted_cross_count: usize,
    /// Probability that a reply quotes an earlier message.
    pub quote_rate: f64,
    /// Probability that a quote has a line truncated.
    pub quote_noise: f64,
    /// Mean messages per on-topic discussion.
    pub message_rate: f64,
    pub doc_revisions: usize,
    pub impl_revisions: usize,
    pub credit_rate: f64,
    pub hint_rate: f64,
    /// Probability that a quote also carries the source's own quote one
    /// level deeper.
    pub nested_quote_rate: f64,
    /// Probability that a reply loses its In-Reply-To/References headers.
    pub header_loss_rate: f64,
    /// Probability that a participant also posts on the other list.
    pub common_rate: f64,
    pub offtopic_per_list: usize,
    pub mother_threads_per_list: usize,
    pub out_of_range_per_list: usize,
    /// Malformed entries added, as a fraction of well-formed messages.
    pub malformed_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            n_participants_per_role: BTreeMap::from([
                (Role::ProjectLeader, 1),
                (Role::Administrator, 2),
                (Role::Developer, 8),
                (Role::User, 20),
            ]),
            n_discussions_per_list: 10,
            parallel_pair_count: 3,
            planted_cross_count: 2,
            quote_rate: 0.5,
            quote_noise: 0.0,
            message_rate: 5.0,
            doc_revisions: 9,
            impl_revisions: 44,
            credit_rate: 0.2,
            hint_rate: 0.5,
            nested_quote_rate: 0.3,
            header_loss_rate: 0.1,
            common_rate: 0.3,
            offtopic_per_list: 3,
            mother_threads_per_list: 1,
            out_of_range_per_list: 1,
            malformed_rate: 0.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), ArgumentError> {
        let bad = |what: String| Err(ArgumentError::Invalid(what));
        for (name, p) in [
            ("quote_rate", self.quote_rate),
            ("quote_noise", self.quote_noise),
            ("credit_rate", self.credit_rate),
            ("hint_rate", self.hint_rate),
            ("nested_quote_rate", self.nested_quote_rate),
            ("header_loss_rate", self.header_loss_rate),
            ("common_rate", self.common_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be a probability, got {p}"));
            }
        }
        if !(0.0..=1.0).contains(&self.malformed_rate) {
            return bad(format!("malformed_rate must be in [0, 1], got {}", self.malformed_rate));
        }
        if !(self.message_rate >= 1.0 && self.message_rate <= 1000.0) {
            return bad(format!("message_rate must be in [1, 1000], got {}", self.message_rate));
        }
        let total: usize = self.n_participants_per_role.values().sum();
        if self.n_participants_per_role.contains_key(&Role::Unknown) {
            return bad("participants cannot be planted with role Unknown".into());
        }
        if self.planted_cross_count > total {
            return bad(format!(
                "planted_cross_count {} exceeds the {total} participants",
                self.planted_cross_count
            ));
        }
        if self.parallel_pair_count > self.n_discussions_per_list {
            return bad(format!(
                "parallel_pair_count {} exceeds n_discussions_per_list {}",
                self.parallel_pair_count, self.n_discussions_per_list
            ));
        }
        if self.planted_cross_count > 0 && self.parallel_pair_count == 0 {
            return bad("cross participants need at least one parallel pair".into());
        }
        let count = |r: Role| self.n_participants_per_role.get(&r).copied().unwrap_or(0);
        let threads = self.n_discussions_per_list
            + self.offtopic_per_list
            + self.mother_threads_per_list
            + self.out_of_range_per_list;
        if count(Role::User) == 0 && threads > 0 {
            return bad("the user list needs at least one User".into());
        }
        if count(Role::Developer) + count(Role::Administrator) + count(Role::ProjectLeader) == 0 && threads > 0 {
            return bad("the developer list needs at least one developer, administrator or leader".into());
        }
        if (self.doc_revisions > 0 || self.impl_revisions > 0)
            && count(Role::Developer) + count(Role::Administrator) + count(Role::ProjectLeader) == 0
        {
            return bad("revisions need at least one developer, administrator or leader".into());
        }
        Ok(())
    }

    /// Reads params from a JSON or TOML file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.is_file() {
            return Err(CliError::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed = if is_toml {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Usage(format!("invalid synth params {}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtList {
    pub list_id: String,
    pub orientation: Orientation,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtCorpus {
    pub name: String,
    pub keywords: BTreeSet<String>,
    pub date_from: String,
    pub date_to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtMessage {
    pub message_id: String,
    pub sender: ParticipantId,
    pub date: Timestamp,
}

/// A discussion the pipeline is expected to rebuild, messages in date order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtDiscussion {
    pub discussion_id: String,
    pub list_id: String,
    pub subject_key: String,
    pub messages: Vec<GtMessage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtQuote {
    pub list_id: String,
    pub message_id: String,
    pub block_index: usize,
    pub depth: usize,
    pub source: MessageKey,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtRevision {
    pub revision_id: String,
    pub space: Space,
    pub committer: ParticipantId,
    pub credited: BTreeSet<ParticipantId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub params: SynthParams,
    /// User-oriented list first.
    pub lists: Vec<GtList>,
    pub roster: Vec<RosterEntry>,
    pub champions: Vec<String>,
    pub corpus: GtCorpus,
    pub discussions: Vec<GtDiscussion>,
    pub cross: BTreeSet<ParticipantId>,
    pub parallel_pairs: Vec<(String, String)>,
    pub quotes: Vec<GtQuote>,
    pub revisions: Vec<GtRevision>,
    /// Well-formed messages written, on-topic or not.
    pub messages_written: usize,
    pub malformed_messages: usize,
}

/// Archive bytes plus ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub files: BTreeMap<String, Vec<u8>>,
    pub ground_truth: GroundTruth,
}

pub const CONFIG_FILE: &str = "config.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

impl SynthCorpus {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
        }
        Ok(())
    }
}
