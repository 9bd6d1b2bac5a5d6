//! On-disk canonical corpus store: JSON files written atomically plus a
//! manifest of SHA-256 digests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Orientation;
use crate::error::CliError;
use crate::ingest::{CorpusSelection, RosterEntry};
use crate::model::{Diagnostic, Message, Participant, RevisionRecord};
use crate::thread::{Discussion, DiscussionIndexRecord};

pub const STORE_SCHEMA: &str = "crossbound-store/1";
const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListRecord {
    pub list_id: String,
    pub orientation: Orientation,
    /// Archive file names, without directories.
    pub archives: Vec<String>,
    pub messages: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub selection: CorpusSelection,
    pub discussions: Vec<Discussion>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Store {
    pub lists: Vec<ListRecord>,
    pub messages: Vec<Message>,
    pub roster: Vec<RosterEntry>,
    pub participants: Vec<Participant>,
    pub revisions: Vec<RevisionRecord>,
    pub corpora: Vec<CorpusRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes to a sibling temp file, then renames over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("store data serializes");
    bytes.push(b'\n');
    bytes
}

impl Store {
    fn files(&self) -> Vec<(&'static str, Vec<u8>)> {
        let index: Vec<(String, Vec<DiscussionIndexRecord>)> = self
            .corpora
            .iter()
            .map(|c| {
                (
                    c.selection.name.clone(),
                    c.discussions.iter().map(DiscussionIndexRecord::from).collect(),
                )
            })
            .collect();
        vec![
            ("lists.json", to_json_bytes(&self.lists)),
            ("messages.json", to_json_bytes(&self.messages)),
            ("roster.json", to_json_bytes(&self.roster)),
            ("participants.json", to_json_bytes(&self.participants)),
            ("revisions.json", to_json_bytes(&self.revisions)),
            ("corpora.json", to_json_bytes(&self.corpora)),
            ("discussion_index.json", to_json_bytes(&index)),
            ("diagnostics.json", to_json_bytes(&self.diagnostics)),
        ]
    }

    /// Writes every file, then the manifest last.
    pub fn save(&self, dir: &Path) -> Result<Manifest, CliError> {
        let mut manifest = Manifest {
            schema_version: STORE_SCHEMA.to_string(),
            files: BTreeMap::new(),
        };
        for (name, bytes) in self.files() {
            write_atomic(&dir.join(name), &bytes)?;
            manifest.files.insert(name.to_string(), sha256_hex(&bytes));
        }
        write_atomic(&dir.join(MANIFEST), &to_json_bytes(&manifest))?;
        Ok(manifest)
    }

    /// Loads a store, checking the schema version and every digest.
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let manifest_path = dir.join(MANIFEST);
        let raw = fs::read(&manifest_path)
            .map_err(|e| CliError::Store(format!("cannot read {}: {e}", manifest_path.display())))?;
        let manifest: Manifest =
            serde_json::from_slice(&raw).map_err(|e| CliError::Store(format!("malformed manifest: {e}")))?;
        if manifest.schema_version != STORE_SCHEMA {
            return Err(CliError::Store(format!(
                "schema version {} does not match {STORE_SCHEMA}",
                manifest.schema_version
            )));
        }
        let read = |name: &str| -> Result<Vec<u8>, CliError> {
            let path: PathBuf = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| CliError::Store(format!("cannot read {}: {e}", path.display())))?;
            match manifest.files.get(name) {
                Some(d) if *d == sha256_hex(&bytes) => Ok(bytes),
                Some(_) => Err(CliError::Store(format!("digest mismatch for {name}"))),
                None => Err(CliError::Store(format!("{name} missing from manifest"))),
            }
        };
        fn parse<T: DeserializeOwned>(name: &str, bytes: Vec<u8>) -> Result<T, CliError> {
            serde_json::from_slice(&bytes).map_err(|e| CliError::Store(format!("malformed {name}: {e}")))
        }
        Ok(Store {
            lists: parse("lists.json", read("lists.json")?)?,
            messages: parse("messages.json", read("messages.json")?)?,
            roster: parse("roster.json", read("roster.json")?)?,
            participants: parse("participants.json", read("participants.json")?)?,
            revisions: parse("revisions.json", read("revisions.json")?)?,
            corpora: parse("corpora.json", read("corpora.json")?)?,
            diagnostics: parse("diagnostics.json", read("diagnostics.json")?)?,
        })
    }
}
