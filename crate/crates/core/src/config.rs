//! Analysis configuration, read from TOML or JSON.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ArgumentError, CliError};
use crate::ingest::KeywordMode;
use crate::metrics::SubjectMatch;
use crate::model::{Timestamp, SECONDS_PER_DAY};
use crate::quote::QuoteOptions;
use crate::thread::ThreadingOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    User,
    Developer,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::User => f.write_str("user"),
            Orientation::Developer => f.write_str("developer"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListSpec {
    pub list_id: String,
    pub orientation: Orientation,
    pub archives: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub name: String,
    pub keywords: BTreeSet<String>,
    /// `YYYY-MM-DD` or RFC 3339. A bare date_to covers the whole day.
    pub date_from: String,
    pub date_to: String,
    #[serde(default)]
    pub keyword_mode: KeywordMode,
}

impl CorpusSpec {
    pub fn range(&self) -> Result<(Timestamp, Timestamp), ArgumentError> {
        let parse = |s: &str| {
            crate::ingest::revlog::parse_iso_utc(s).ok_or_else(|| ArgumentError::Invalid(format!("bad date {s:?}")))
        };
        let from = parse(&self.date_from)?;
        let mut to = parse(&self.date_to)?;
        if is_bare_date(&self.date_to) {
            to += SECONDS_PER_DAY - 1;
        }
        if from > to {
            return Err(ArgumentError::InvertedRange { from, to });
        }
        Ok((from, to))
    }
}

fn is_bare_date(s: &str) -> bool {
    chrono::NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").is_ok()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevisionSources {
    #[serde(default)]
    pub documentation: Vec<PathBuf>,
    #[serde(default)]
    pub implementation: Vec<PathBuf>,
    /// Templates with one `{name}` slot; defaults apply when absent.
    #[serde(default)]
    pub credit_patterns: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorySpec {
    pub labels: Vec<String>,
    pub unknown_label: String,
    /// Roster names shown under the user-champion label.
    #[serde(default)]
    pub champions: Vec<String>,
}

impl Default for CategorySpec {
    fn default() -> Self {
        let scheme = crate::attraction::CategoryScheme::default();
        CategorySpec {
            labels: scheme.labels,
            unknown_label: scheme.unknown_label,
            champions: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub quote_min_chars: usize,
    pub quote_min_tokens: usize,
    pub quote_fuzzy: bool,
    pub quote_fuzzy_overlap: f64,
    /// Token-Jaccard threshold for same-topic matching; exact when absent.
    pub subject_jaccard: Option<f64>,
    pub rd_threshold: f64,
    pub rd_min_cell: u64,
    /// Subject-fallback window; 0 disables the fallback.
    pub fallback_window_days: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        let q = QuoteOptions::default();
        Thresholds {
            quote_min_chars: q.min_chars,
            quote_min_tokens: q.min_tokens,
            quote_fuzzy: q.fuzzy,
            quote_fuzzy_overlap: q.fuzzy_overlap,
            subject_jaccard: None,
            rd_threshold: 0.0,
            rd_min_cell: 5,
            fallback_window_days: 14,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), ArgumentError> {
        let bad = |what: &str| Err(ArgumentError::Invalid(what.to_string()));
        if !(self.quote_fuzzy_overlap > 0.0 && self.quote_fuzzy_overlap <= 1.0) {
            return bad("quote_fuzzy_overlap must be in (0, 1]");
        }
        if let Some(j) = self.subject_jaccard {
            if !(j > 0.0 && j <= 1.0) {
                return bad("subject_jaccard must be in (0, 1]");
            }
        }
        if !(self.rd_threshold >= 0.0 && self.rd_threshold.is_finite()) {
            return bad("rd_threshold must be a finite value >= 0");
        }
        if self.fallback_window_days > 3650 {
            return bad("fallback_window_days must be at most 3650");
        }
        Ok(())
    }

    pub fn quote_options(&self) -> QuoteOptions {
        QuoteOptions {
            min_chars: self.quote_min_chars,
            min_tokens: self.quote_min_tokens,
            fuzzy: self.quote_fuzzy,
            fuzzy_overlap: self.quote_fuzzy_overlap,
        }
    }

    pub fn threading_options(&self) -> ThreadingOptions {
        ThreadingOptions {
            fallback_window_days: (self.fallback_window_days > 0).then_some(self.fallback_window_days),
        }
    }

    pub fn subject_match(&self) -> SubjectMatch {
        self.subject_jaccard.map_or(SubjectMatch::Exact, SubjectMatch::Jaccard)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub corpora: Vec<CorpusSpec>,
    pub lists: Vec<ListSpec>,
    pub roster: PathBuf,
    #[serde(default)]
    pub stage_lexicon: Option<PathBuf>,
    #[serde(default)]
    pub revisions: RevisionSources,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub categories: CategorySpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl AnalysisConfig {
    /// Reads and validates a config file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.is_file() {
            return Err(CliError::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let mut config = if is_toml {
            Self::from_toml_str(&text)?
        } else {
            Self::from_json_str(&text)?
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.rebase(&base);
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.roster);
        if let Some(p) = self.stage_lexicon.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output_dir.as_mut() {
            fix(p);
        }
        for list in &mut self.lists {
            list.archives.iter_mut().for_each(fix);
        }
        self.revisions.documentation.iter_mut().for_each(fix);
        self.revisions.implementation.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<(), ArgumentError> {
        if self.lists.len() != 2 {
            return Err(ArgumentError::ListCount(self.lists.len()));
        }
        let orientations: BTreeSet<Orientation> = self.lists.iter().map(|l| l.orientation).collect();
        if orientations.len() != 2 {
            return Err(ArgumentError::Invalid(
                "one list must be user-oriented and the other developer-oriented".into(),
            ));
        }
        if self.lists[0].list_id == self.lists[1].list_id {
            return Err(ArgumentError::SameList(self.lists[0].list_id.clone()));
        }
        if self.lists.iter().any(|l| l.list_id.trim().is_empty()) {
            return Err(ArgumentError::Invalid("list_id must not be empty".into()));
        }
        if self.corpora.is_empty() {
            return Err(ArgumentError::Invalid("at least one corpus is required".into()));
        }
        let mut names = BTreeSet::new();
        for c in &self.corpora {
            if c.name.trim().is_empty() || !names.insert(c.name.as_str()) {
                return Err(ArgumentError::Invalid(format!(
                    "corpus name {:?} is empty or repeated",
                    c.name
                )));
            }
            if c.keywords.iter().all(|k| k.trim().is_empty()) {
                return Err(ArgumentError::NoKeywords);
            }
            c.range()?;
        }
        self.thresholds.validate()?;
        self.category_scheme_labels_ok()
    }

    fn category_scheme_labels_ok(&self) -> Result<(), ArgumentError> {
        crate::attraction::CategoryScheme {
            labels: self.categories.labels.clone(),
            unknown_label: self.categories.unknown_label.clone(),
            champions: BTreeSet::new(),
        }
        .validate()
    }

    /// Lists ordered user first, developer second.
    pub fn ordered_lists(&self) -> Vec<&ListSpec> {
        let mut lists: Vec<&ListSpec> = self.lists.iter().collect();
        lists.sort_by_key(|l| l.orientation);
        lists
    }

    /// Every input file the config references.
    pub fn input_paths(&self) -> Vec<&Path> {
        let mut paths: Vec<&Path> = vec![self.roster.as_path()];
        paths.extend(self.stage_lexicon.as_deref());
        for l in &self.lists {
            paths.extend(l.archives.iter().map(PathBuf::as_path));
        }
        paths.extend(self.revisions.documentation.iter().map(PathBuf::as_path));
        paths.extend(self.revisions.implementation.iter().map(PathBuf::as_path));
        paths
    }
}
