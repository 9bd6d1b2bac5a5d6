//! Who-quotes-whom contingency tables, relative deviation and attraction
//! graphs over participant categories.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::ArgumentError;
use crate::ingest::Roster;
use crate::model::{ParticipantId, Role};
use crate::quote::QuoteEdge;

pub const USER: &str = "U";
pub const USER_CHAMPION: &str = "U-C";
pub const ADMIN_DEVELOPER: &str = "A-D";
pub const PROJECT_LEADER: &str = "PL";
pub const CROSS_PARTICIPANT: &str = "CP";

/// Ordered category labels plus the roster-driven assignment rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryScheme {
    pub labels: Vec<String>,
    /// Label for participants whose role is Unknown. Must be one of `labels`.
    pub unknown_label: String,
    /// Participants shown under `U-C` when that label is in the scheme.
    #[serde(default)]
    pub champions: BTreeSet<ParticipantId>,
}

impl Default for CategoryScheme {
    fn default() -> Self {
        CategoryScheme {
            labels: [USER, USER_CHAMPION, ADMIN_DEVELOPER, PROJECT_LEADER, CROSS_PARTICIPANT]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            unknown_label: USER.to_string(),
            champions: BTreeSet::new(),
        }
    }
}

impl CategoryScheme {
    pub fn validate(&self) -> Result<(), ArgumentError> {
        let distinct: BTreeSet<&String> = self.labels.iter().collect();
        if distinct.len() != self.labels.len() || self.labels.is_empty() {
            return Err(ArgumentError::Invalid(
                "category labels must be non-empty and distinct".into(),
            ));
        }
        if !self.has(&self.unknown_label) {
            return Err(ArgumentError::UnknownCategory(self.unknown_label.clone()));
        }
        Ok(())
    }

    fn has(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Precedence: PL > U-C > CP > A-D > U; labels absent from the scheme
    /// are skipped.
    pub fn category_for(&self, id: &ParticipantId, role: Role, is_cross: bool) -> String {
        let candidates = [
            (role == Role::ProjectLeader, PROJECT_LEADER),
            (self.champions.contains(id), USER_CHAMPION),
            (is_cross, CROSS_PARTICIPANT),
            (matches!(role, Role::Administrator | Role::Developer), ADMIN_DEVELOPER),
            (role == Role::User, USER),
        ];
        candidates
            .iter()
            .find(|(hit, label)| *hit && self.has(label))
            .map_or_else(|| self.unknown_label.clone(), |(_, label)| label.to_string())
    }

    pub fn assign<'a>(
        &self,
        participants: impl IntoIterator<Item = &'a ParticipantId>,
        roster: &Roster,
        cross: &BTreeSet<ParticipantId>,
    ) -> BTreeMap<ParticipantId, String> {
        participants
            .into_iter()
            .map(|p| (p.clone(), self.category_for(p, roster.role_of(p), cross.contains(p))))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ListFilter {
    #[default]
    Pooled,
    List(String),
}

impl ListFilter {
    fn admits(&self, list_id: &str) -> bool {
        match self {
            ListFilter::Pooled => true,
            ListFilter::List(l) => l == list_id,
        }
    }
}

/// Square table, rows = quoter category, columns = quoted category.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
    /// Edges inside the filter whose source could not be resolved.
    pub unresolved: u64,
}

impl ContingencyTable {
    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        ContingencyTable {
            labels,
            counts: vec![vec![0; n]; n],
            total: 0,
            unresolved: 0,
        }
    }

    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, ArgumentError> {
        if counts.len() != labels.len() || counts.iter().any(|r| r.len() != labels.len()) {
            return Err(ArgumentError::Invalid(
                "contingency counts must be square and match the labels".into(),
            ));
        }
        let total = counts.iter().flatten().sum();
        Ok(ContingencyTable {
            labels,
            counts,
            total,
            unresolved: 0,
        })
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.labels.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

pub fn contingency_by_category(
    edges: &[QuoteEdge],
    category_of: &BTreeMap<ParticipantId, String>,
    scheme: &CategoryScheme,
    filter: &ListFilter,
) -> Result<ContingencyTable, ArgumentError> {
    let mut table = ContingencyTable::zeros(scheme.labels.clone());
    let locate = |p: &ParticipantId| -> Result<usize, ArgumentError> {
        let label = category_of
            .get(p)
            .ok_or_else(|| ArgumentError::UnknownCategory(format!("(none for {p})")))?;
        scheme
            .index(label)
            .ok_or_else(|| ArgumentError::UnknownCategory(label.clone()))
    };
    for edge in edges.iter().filter(|e| filter.admits(&e.list_id)) {
        if !edge.resolved() {
            table.unresolved += 1;
            continue;
        }
        let i = locate(&edge.quoter)?;
        let j = locate(&edge.quoted)?;
        table.counts[i][j] += 1;
        table.total += 1;
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    /// `None` where the expected count is zero.
    pub values: Vec<Vec<Option<f64>>>,
}

/// (observed − expected) / expected with expected = row·col / total.
pub fn relative_deviation(table: &ContingencyTable) -> Result<RdMatrix, ArgumentError> {
    if table.total == 0 {
        return Err(ArgumentError::EmptyTable);
    }
    let rows = table.row_totals();
    let cols = table.col_totals();
    let total = table.total as f64;
    let n = table.labels.len();
    let mut expected = vec![vec![0.0; n]; n];
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let e = rows[i] as f64 * cols[j] as f64 / total;
            expected[i][j] = e;
            if e > 0.0 {
                values[i][j] = Some((table.counts[i][j] as f64 - e) / e);
            }
        }
    }
    Ok(RdMatrix {
        labels: table.labels.clone(),
        counts: table.counts.clone(),
        expected,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionEdge {
    pub from: String,
    pub to: String,
    pub weight: f64,
    pub count: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionOptions {
    pub threshold: f64,
    pub min_cell: u64,
}

impl Default for AttractionOptions {
    fn default() -> Self {
        AttractionOptions {
            threshold: 0.0,
            min_cell: 5,
        }
    }
}

/// Cells with RD above the threshold and enough support, heaviest first.
pub fn attraction_edges(rd: &RdMatrix, options: AttractionOptions) -> Vec<AttractionEdge> {
    let n = rd.labels.len();
    let rows: Vec<u64> = rd.counts.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..n).map(|j| rd.counts.iter().map(|r| r[j]).sum()).collect();
    let total: u64 = rows.iter().sum();
    // Ordering uses the exact ratio (n·N − r·c) / (r·c) so that equal
    // deviations tie regardless of float rounding.
    let mut keyed = Vec::new();
    for (i, row) in rd.values.iter().enumerate() {
        for (j, value) in row.iter().enumerate() {
            if let Some(v) = *value {
                if v > options.threshold && rd.counts[i][j] >= options.min_cell {
                    let den = rows[i] as i128 * cols[j] as i128;
                    let num = rd.counts[i][j] as i128 * total as i128 - den;
                    let edge = AttractionEdge {
                        from: rd.labels[i].clone(),
                        to: rd.labels[j].clone(),
                        weight: v,
                        count: rd.counts[i][j],
                    };
                    keyed.push(((num, den), edge));
                }
            }
        }
    }
    keyed.sort_by(|((an, ad), a), ((bn, bd), b)| {
        (bn * ad)
            .cmp(&(an * bd))
            .then_with(|| a.from.cmp(&b.from))
            .then_with(|| a.to.cmp(&b.to))
    });
    keyed.into_iter().map(|(_, e)| e).collect()
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz digraph: pooled edges solid, per-list edges dashed and
/// labelled with their list.
pub fn attraction_dot(
    name: &str,
    labels: &[String],
    pooled: &[AttractionEdge],
    per_list: &BTreeMap<String, Vec<AttractionEdge>>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_id(name));
    for label in labels {
        let _ = writeln!(out, "  {};", dot_id(label));
    }
    for e in pooled {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{:.3}\", weight={}];",
            dot_id(&e.from),
            dot_id(&e.to),
            e.weight,
            e.count
        );
    }
    for (list, edges) in per_list {
        for e in edges {
            let _ = writeln!(
                out,
                "  {} -> {} [label=\"{:.3} ({})\", style=dashed, weight={}];",
                dot_id(&e.from),
                dot_id(&e.to),
                e.weight,
                list.replace('"', "'"),
                e.count
            );
        }
    }
    out.push_str("}\n");
    out
}
