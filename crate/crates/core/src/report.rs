//! Renders the metrics bundle as CSV tables, JSON and DOT.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::attraction::attraction_dot;
use crate::bundle::{AttractionMetrics, MetricsBundle};
use crate::config::Orientation;
use crate::error::CliError;
use crate::metrics::{ParallelPair, TimelineRecord};
use crate::store::{to_json_bytes, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Dot,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "dot" => Ok(Format::Dot),
            other => Err(CliError::Usage(format!(
                "unknown format {other:?} (expected csv, json or dot)"
            ))),
        }
    }
}

/// Parses a comma-separated format list such as `csv,dot`.
pub fn parse_formats(spec: &str) -> Result<BTreeSet<Format>, CliError> {
    let formats = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Format::from_str)
        .collect::<Result<BTreeSet<_>, _>>()?;
    if formats.is_empty() {
        return Err(CliError::Usage("no output format given".into()));
    }
    Ok(formats)
}

/// Integer percent of num/den, rounded half away from zero.
pub fn percent(num: u64, den: u64) -> Option<u64> {
    (den > 0).then(|| (200 * num + den) / (2 * den))
}

pub fn percent_label(num: u64, den: u64) -> String {
    percent(num, den).map(|p| format!("{p}%")).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_table(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn table1_csv(bundle: &MetricsBundle) -> Vec<u8> {
    let rows = bundle
        .corpora
        .iter()
        .flat_map(|c| {
            c.lists.iter().map(move |l| {
                vec![
                    c.name.clone(),
                    l.list_id.clone(),
                    l.discussions.to_string(),
                    l.participants.to_string(),
                    l.messages.to_string(),
                ]
            })
        })
        .collect();
    csv_table(&["corpus", "list", "discussions", "participants", "messages"], rows)
}

pub fn table2_csv(bundle: &MetricsBundle) -> Vec<u8> {
    let mut rows = Vec::new();
    for c in &bundle.corpora {
        for l in &c.lists {
            let total = l.participants as u64;
            for (class, count) in [("regular", l.regular), ("occasional", l.occasional)] {
                rows.push(vec![
                    c.name.clone(),
                    l.list_id.clone(),
                    class.to_string(),
                    count.to_string(),
                    percent_label(count as u64, total),
                    l.q3.map(|q| q.to_string()).unwrap_or_default(),
                ]);
            }
        }
    }
    csv_table(&["corpus", "list", "class", "count", "percent", "q3"], rows)
}

pub fn table3_csv(bundle: &MetricsBundle) -> Vec<u8> {
    let mut rows = Vec::new();
    for c in &bundle.corpora {
        for r in &c.involvement {
            rows.push(vec![
                c.name.clone(),
                r.list_id.clone(),
                r.category.to_string(),
                r.category.is_exclusive().to_string(),
                r.members.to_string(),
                r.messages.to_string(),
                opt_num(r.mean),
            ]);
        }
    }
    csv_table(
        &["corpus", "list", "category", "exclusive", "members", "messages", "mean"],
        rows,
    )
}

pub fn contributions_csv(bundle: &MetricsBundle) -> Vec<u8> {
    let mut rows = Vec::new();
    for c in &bundle.corpora {
        let list_of = |o: Orientation| c.lists.iter().find(|l| l.orientation == o).map(|l| l.list_id.as_str());
        let (user, dev) = (list_of(Orientation::User), list_of(Orientation::Developer));
        for p in &c.contributions {
            let msgs = |l: Option<&str>| l.and_then(|l| p.discussion_messages.get(l)).copied().unwrap_or(0);
            rows.push(vec![
                c.name.clone(),
                p.participant.to_string(),
                p.role.to_string(),
                msgs(user).to_string(),
                msgs(dev).to_string(),
                p.doc_revisions_effective.to_string(),
                p.doc_revisions_credited.to_string(),
                p.impl_revisions_effective.to_string(),
                p.impl_revisions_credited.to_string(),
            ]);
        }
    }
    csv_table(
        &[
            "corpus",
            "participant",
            "role",
            "msgs_user_list",
            "msgs_dev_list",
            "doc_eff",
            "doc_cred",
            "impl_eff",
            "impl_cred",
        ],
        rows,
    )
}

pub fn revisions_csv(bundle: &MetricsBundle) -> Vec<u8> {
    let mut rows = Vec::new();
    for (space, eff) in &bundle.revisions.effective {
        let cred = bundle.revisions.credited.get(space);
        let mut people: BTreeSet<_> = eff.counts.keys().collect();
        if let Some(c) = cred {
            people.extend(c.credited.keys());
        }
        for p in people {
            let e = eff.counts.get(p).copied().unwrap_or(0);
            let cr = cred.and_then(|c| c.credited.get(p)).copied().unwrap_or(0);
            let combined = cred.and_then(|c| c.combined.get(p)).copied().unwrap_or(e);
            rows.push(vec![
                space.to_string(),
                p.to_string(),
                e.to_string(),
                percent_label(e as u64, eff.total as u64),
                cr.to_string(),
                combined.to_string(),
                percent_label(combined as u64, eff.total as u64),
                eff.total.to_string(),
            ]);
        }
    }
    csv_table(
        &[
            "space",
            "participant",
            "effective",
            "effective_percent",
            "credited",
            "combined",
            "combined_percent",
            "total",
        ],
        rows,
    )
}

fn rd_rows(corpus: &str, scope: &str, m: &AttractionMetrics, rows: &mut Vec<Vec<String>>) {
    let Some(rd) = &m.rd else { return };
    for (i, from) in rd.labels.iter().enumerate() {
        for (j, to) in rd.labels.iter().enumerate() {
            rows.push(vec![
                corpus.to_string(),
                scope.to_string(),
                from.clone(),
                to.clone(),
                rd.counts[i][j].to_string(),
                rd.expected[i][j].to_string(),
                opt_num(rd.values[i][j]),
            ]);
        }
    }
}

pub fn rd_csv(bundle: &MetricsBundle) -> Vec<u8> {
    let mut rows = Vec::new();
    for c in &bundle.corpora {
        rd_rows(&c.name, "pooled", &c.attraction_pooled, &mut rows);
        for (list, m) in &c.attraction_per_list {
            rd_rows(&c.name, list, m, &mut rows);
        }
    }
    csv_table(
        &["corpus", "scope", "quoter", "quoted", "count", "expected", "rd"],
        rows,
    )
}

pub fn quote_edges_csv(bundle: &MetricsBundle) -> Vec<u8> {
    let mut rows = Vec::new();
    for c in &bundle.corpora {
        for e in &c.quote_edges {
            rows.push(vec![
                c.name.clone(),
                e.list_id.clone(),
                e.quoter_message.clone(),
                e.block_index.to_string(),
                e.depth.to_string(),
                e.quoter.to_string(),
                e.quoted.to_string(),
                e.quoted_message.as_ref().map(ToString::to_string).unwrap_or_default(),
                e.self_quote.to_string(),
            ]);
        }
    }
    csv_table(
        &[
            "corpus",
            "list",
            "quoter_message",
            "block",
            "depth",
            "quoter",
            "quoted",
            "quoted_message",
            "self_quote",
        ],
        rows,
    )
}

#[derive(Serialize)]
struct TimelineView<'a> {
    design_steps: &'a BTreeMap<String, Vec<String>>,
    parallel_pairs: &'a [ParallelPair],
    discussions: &'a [TimelineRecord],
    pooled_opening_delay_days: Option<f64>,
    opening_delay_days: BTreeMap<&'a str, Option<f64>>,
}

pub fn timeline_json(bundle: &MetricsBundle) -> Vec<u8> {
    let view: BTreeMap<&str, TimelineView> = bundle
        .corpora
        .iter()
        .map(|c| {
            (
                c.name.as_str(),
                TimelineView {
                    design_steps: &c.design_steps,
                    parallel_pairs: &c.parallel_pairs,
                    discussions: &c.timeline,
                    pooled_opening_delay_days: c.pooled_opening_delay_days,
                    opening_delay_days: c
                        .lists
                        .iter()
                        .map(|l| (l.list_id.as_str(), l.mean_opening_delay_days))
                        .collect(),
                },
            )
        })
        .collect();
    to_json_bytes(&view)
}

pub fn attraction_dot_all(bundle: &MetricsBundle) -> Vec<u8> {
    let mut out = String::new();
    for c in &bundle.corpora {
        let per_list = c
            .attraction_per_list
            .iter()
            .map(|(l, m)| (l.clone(), m.edges.clone()))
            .collect();
        out.push_str(&attraction_dot(
            &c.name,
            &c.attraction_pooled.contingency.labels,
            &c.attraction_pooled.edges,
            &per_list,
        ));
    }
    out.into_bytes()
}

/// File name and contents of every artifact for the requested formats.
pub fn render(bundle: &MetricsBundle, formats: &BTreeSet<Format>) -> Vec<(&'static str, Vec<u8>)> {
    let mut files = Vec::new();
    if formats.contains(&Format::Csv) {
        files.push(("table1.csv", table1_csv(bundle)));
        files.push(("table2.csv", table2_csv(bundle)));
        files.push(("table3.csv", table3_csv(bundle)));
        files.push(("contributions.csv", contributions_csv(bundle)));
        files.push(("revisions.csv", revisions_csv(bundle)));
        files.push(("rd.csv", rd_csv(bundle)));
        files.push(("quote_edges.csv", quote_edges_csv(bundle)));
    }
    if formats.contains(&Format::Json) {
        files.push(("timeline.json", timeline_json(bundle)));
        files.push(("bundle.json", bundle.to_json().into_bytes()));
    }
    if formats.contains(&Format::Dot) {
        files.push(("attraction.dot", attraction_dot_all(bundle)));
    }
    files
}

pub fn write_reports(bundle: &MetricsBundle, formats: &BTreeSet<Format>, dir: &Path) -> Result<Vec<String>, CliError> {
    let mut written = Vec::new();
    for (name, bytes) in render(bundle, formats) {
        write_atomic(&dir.join(name), &bytes)?;
        written.push(name.to_string());
    }
    Ok(written)
}
