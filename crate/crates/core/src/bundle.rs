//! The structured metrics bundle passed from `analyze` to `report`, and a
//! tolerant field-by-field comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::attraction::{AttractionEdge, ContingencyTable, RdMatrix};
use crate::config::Orientation;
use crate::error::CliError;
use crate::metrics::{InvolvementRow, ParallelPair, ParticipationProfile, Regularity, TimelineRecord};
use crate::model::{ParticipantId, Space};
use crate::quote::QuoteEdge;
use crate::revisions::{ContributionProfile, CreditCounts, RevisionCounts};

pub const BUNDLE_SCHEMA: &str = "crossbound-bundle/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ListMetrics {
    pub list_id: String,
    pub orientation: Orientation,
    pub discussions: usize,
    pub participants: usize,
    pub messages: usize,
    /// Distinct discussions per participant.
    pub participation: BTreeMap<ParticipantId, usize>,
    pub q3: Option<usize>,
    pub regularity: BTreeMap<ParticipantId, Regularity>,
    pub regular: usize,
    pub occasional: usize,
    pub mean_opening_delay_days: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionMetrics {
    pub contingency: ContingencyTable,
    /// Absent when the table is empty.
    pub rd: Option<RdMatrix>,
    pub edges: Vec<AttractionEdge>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetrics {
    pub name: String,
    /// User-oriented list first.
    pub lists: Vec<ListMetrics>,
    pub common: BTreeSet<ParticipantId>,
    pub parallel_pairs: Vec<ParallelPair>,
    pub cross: BTreeSet<ParticipantId>,
    pub profiles: Vec<ParticipationProfile>,
    pub involvement: Vec<InvolvementRow>,
    pub pooled_opening_delay_days: Option<f64>,
    pub design_steps: BTreeMap<String, Vec<String>>,
    pub timeline: Vec<TimelineRecord>,
    pub quote_edges: Vec<QuoteEdge>,
    pub categories: BTreeMap<ParticipantId, String>,
    pub attraction_pooled: AttractionMetrics,
    pub attraction_per_list: BTreeMap<String, AttractionMetrics>,
    pub contributions: Vec<ContributionProfile>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RevisionMetrics {
    pub effective: BTreeMap<Space, RevisionCounts>,
    pub credited: BTreeMap<Space, CreditCounts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub schema_version: String,
    pub corpora: Vec<CorpusMetrics>,
    pub revisions: RevisionMetrics,
}

impl MetricsBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    /// Reads a bundle written by `analyze`; any problem is a store error.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read(path).map_err(|e| CliError::Store(format!("cannot read {}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_slice(&raw).map_err(|e| CliError::Store(format!("malformed bundle: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_str()) {
            Some(BUNDLE_SCHEMA) => {}
            other => {
                return Err(CliError::Store(format!(
                    "bundle schema {} does not match {BUNDLE_SCHEMA}",
                    other.unwrap_or("(missing)")
                )))
            }
        }
        serde_json::from_value(value).map_err(|e| CliError::Store(format!("malformed bundle: {e}")))
    }
}

/// Paths where `a` and `b` differ. Integers, strings and structure must
/// match exactly; non-integer numbers within `rel_tol` relative error.
pub fn compare_bundles(a: &MetricsBundle, b: &MetricsBundle, rel_tol: f64) -> Vec<String> {
    let va = serde_json::to_value(a).expect("bundle serializes");
    let vb = serde_json::to_value(b).expect("bundle serializes");
    let mut diffs = Vec::new();
    compare_values("$", &va, &vb, rel_tol, &mut diffs);
    diffs
}

fn compare_values(path: &str, a: &Value, b: &Value, tol: f64, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            if x.is_f64() || y.is_f64() {
                let (fx, fy) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
                let scale = fx.abs().max(fy.abs());
                if (fx - fy).abs() > tol * scale && fx != fy {
                    out.push(format!("{path}: {fx} != {fy}"));
                }
            } else if x != y {
                out.push(format!("{path}: {x} != {y}"));
            }
        }
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                out.push(format!("{path}: length {} != {}", xs.len(), ys.len()));
            }
            for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                compare_values(&format!("{path}[{i}]"), x, y, tol, out);
            }
        }
        (Value::Object(xs), Value::Object(ys)) => {
            let keys: BTreeSet<&String> = xs.keys().chain(ys.keys()).collect();
            for k in keys {
                match (xs.get(k), ys.get(k)) {
                    (Some(x), Some(y)) => compare_values(&format!("{path}.{k}"), x, y, tol, out),
                    _ => out.push(format!("{path}.{k}: present on one side only")),
                }
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{path}: {a} != {b}")),
    }
}
