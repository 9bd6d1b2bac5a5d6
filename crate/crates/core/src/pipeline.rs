//! End-to-end orchestration: archives to store, store to metrics bundle.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::path::Path;

use crate::attraction::{
    attraction_edges, contingency_by_category, relative_deviation, AttractionOptions, CategoryScheme, ListFilter,
};
use crate::bundle::{AttractionMetrics, CorpusMetrics, ListMetrics, MetricsBundle, RevisionMetrics, BUNDLE_SCHEMA};
use crate::config::AnalysisConfig;
use crate::error::{ArgumentError, CliError};
use crate::ingest::{parse_mbox_with_roster, parse_revision_log, select_corpus, Roster, DEFAULT_CREDIT_PATTERNS};
use crate::metrics::{
    build_timeline, classify_regularity, common_participants, cross_participants, find_parallel_discussions,
    group_by_design_step, involvement_by_category, mean_opening_delay, participation_counts, participation_profiles,
    third_quartile, Regularity, StageLexicon,
};
use crate::model::{Diagnostic, Message, Participant, ParticipantId, Role, Space};
use crate::quote::{build_quote_graph, QuoteEdge};
use crate::revisions::{contribution_profiles, credited_contributions, effective_revision_counts};
use crate::store::{CorpusRecord, ListRecord, Store};
use crate::thread::{build_discussions, Discussion};

fn open(path: &Path) -> Result<File, CliError> {
    if !path.is_file() {
        return Err(CliError::MissingInput(path.to_path_buf()));
    }
    File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Fails with the first referenced input that does not exist.
pub fn check_inputs(config: &AnalysisConfig) -> Result<(), CliError> {
    match config.input_paths().into_iter().find(|p| !p.is_file()) {
        Some(p) => Err(CliError::MissingInput(p.to_path_buf())),
        None => Ok(()),
    }
}

pub fn load_roster(path: &Path) -> Result<Roster, CliError> {
    Ok(Roster::from_json(open(path)?)?)
}

/// The configured stage lexicon, or the built-in design steps.
pub fn load_lexicon(config: &AnalysisConfig) -> Result<StageLexicon, CliError> {
    let Some(path) = &config.stage_lexicon else {
        return Ok(StageLexicon::design_steps());
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("invalid stage lexicon {}: {e}", path.display())))
}

/// Parses every archive and log and threads each configured corpus.
pub fn ingest(config: &AnalysisConfig) -> Result<Store, CliError> {
    check_inputs(config)?;
    let roster = load_roster(&config.roster)?;
    let mut store = Store {
        roster: roster.to_entries(),
        ..Store::default()
    };

    for list in config.ordered_lists() {
        let mut seen: HashSet<String> = HashSet::new();
        let mut messages: Vec<Message> = Vec::new();
        for path in &list.archives {
            let parsed = parse_mbox_with_roster(open(path)?, &list.list_id, &roster)?;
            store.diagnostics.extend(parsed.diagnostics);
            for m in parsed.messages {
                if seen.insert(m.message_id.clone()) {
                    messages.push(m);
                } else {
                    store.diagnostics.push(
                        Diagnostic::new(
                            list.list_id.clone(),
                            "duplicate Message-ID across archives, later copy skipped",
                        )
                        .for_message(m.message_id),
                    );
                }
            }
        }
        messages.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        store.lists.push(ListRecord {
            list_id: list.list_id.clone(),
            orientation: list.orientation,
            archives: list
                .archives
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default()
                })
                .collect(),
            messages: messages.len(),
        });
        store.messages.extend(messages);
    }

    let patterns: Vec<String> = config
        .revisions
        .credit_patterns
        .clone()
        .unwrap_or_else(|| DEFAULT_CREDIT_PATTERNS.iter().map(|s| s.to_string()).collect());
    for (space, paths) in [
        (Space::Documentation, &config.revisions.documentation),
        (Space::Implementation, &config.revisions.implementation),
    ] {
        for path in paths {
            let parsed = parse_revision_log(open(path)?, space, &patterns, &roster)?;
            store.revisions.extend(parsed.records);
            store.diagnostics.extend(parsed.diagnostics);
        }
    }

    store.participants = collect_participants(&roster, &store.messages, &store.revisions);

    let options = config.thresholds.threading_options();
    for spec in &config.corpora {
        let (from, to) = spec.range()?;
        let selection = select_corpus(&spec.name, &store.messages, &spec.keywords, from, to, spec.keyword_mode)?;
        let threading = build_discussions(&selection, &store.messages, &options)?;
        store.diagnostics.extend(threading.diagnostics);
        store.corpora.push(CorpusRecord {
            selection,
            discussions: threading.discussions,
        });
    }
    Ok(store)
}

fn collect_participants(
    roster: &Roster,
    messages: &[Message],
    revisions: &[crate::model::RevisionRecord],
) -> Vec<Participant> {
    let mut all: BTreeMap<ParticipantId, Participant> = roster
        .participants()
        .iter()
        .map(|p| (p.id.clone(), p.clone()))
        .collect();
    for m in messages {
        if roster.get(&m.sender).is_some() {
            continue;
        }
        let resolved = crate::ingest::resolve_identity(&m.sender_raw, roster);
        let entry = all.entry(m.sender.clone()).or_insert_with(|| Participant {
            id: m.sender.clone(),
            aliases: BTreeSet::new(),
            role: Role::Unknown,
            unparsed: resolved.unparsed,
        });
        entry.aliases.extend(resolved.aliases);
    }
    for r in revisions {
        for id in std::iter::once(&r.committer).chain(&r.credited) {
            all.entry(id.clone()).or_insert_with(|| Participant {
                id: id.clone(),
                aliases: BTreeSet::new(),
                role: Role::Unknown,
                unparsed: false,
            });
        }
    }
    all.into_values().collect()
}

/// Roster-resolved category scheme from the config.
pub fn category_scheme(config: &AnalysisConfig, roster: &Roster) -> Result<CategoryScheme, ArgumentError> {
    let mut champions = BTreeSet::new();
    for name in &config.categories.champions {
        let p = roster
            .lookup_name(name)
            .ok_or_else(|| ArgumentError::Invalid(format!("champion {name:?} is not in the roster")))?;
        champions.insert(p.id.clone());
    }
    let scheme = CategoryScheme {
        labels: config.categories.labels.clone(),
        unknown_label: config.categories.unknown_label.clone(),
        champions,
    };
    scheme.validate()?;
    Ok(scheme)
}

/// Computes every metric for every corpus in the store.
pub fn analyze(config: &AnalysisConfig, store: &Store, lexicon: &StageLexicon) -> Result<MetricsBundle, CliError> {
    let roster = Roster::new(store.roster.clone())?;
    let scheme = category_scheme(config, &roster)?;
    for id in lexicon.overrides.keys() {
        if !store
            .corpora
            .iter()
            .any(|c| c.discussions.iter().any(|d| &d.discussion_id == id))
        {
            return Err(ArgumentError::UnknownDiscussion(id.clone()).into());
        }
    }
    let list_ids: Vec<&str> = config.ordered_lists().iter().map(|l| l.list_id.as_str()).collect();
    let mut corpora = Vec::new();
    for corpus in &store.corpora {
        corpora.push(analyze_corpus(
            config, store, corpus, &list_ids, &roster, &scheme, lexicon,
        )?);
    }
    let mut revisions = RevisionMetrics::default();
    for space in [Space::Documentation, Space::Implementation] {
        revisions
            .effective
            .insert(space, effective_revision_counts(&store.revisions, Some(space)));
        revisions
            .credited
            .insert(space, credited_contributions(&store.revisions, Some(space)));
    }
    Ok(MetricsBundle {
        schema_version: BUNDLE_SCHEMA.to_string(),
        corpora,
        revisions,
    })
}

fn list_metrics(
    config: &AnalysisConfig,
    list_id: &str,
    discussions: &[Discussion],
) -> Result<ListMetrics, ArgumentError> {
    let participation = participation_counts(discussions, list_id)?;
    let values: Vec<usize> = participation.values().copied().collect();
    let regularity = classify_regularity(&participation);
    let regular = regularity.values().filter(|r| **r == Regularity::Regular).count();
    let orientation = config
        .lists
        .iter()
        .find(|l| l.list_id == list_id)
        .map(|l| l.orientation)
        .ok_or_else(|| ArgumentError::Invalid(format!("list {list_id} is not configured")))?;
    Ok(ListMetrics {
        list_id: list_id.to_string(),
        orientation,
        discussions: discussions.len(),
        participants: participation.len(),
        messages: discussions.iter().map(|d| d.messages.len()).sum(),
        q3: third_quartile(&values).ok(),
        regular,
        occasional: regularity.len() - regular,
        regularity,
        participation,
        mean_opening_delay_days: mean_opening_delay(discussions),
    })
}

fn attraction(
    edges: &[QuoteEdge],
    categories: &BTreeMap<ParticipantId, String>,
    scheme: &CategoryScheme,
    filter: &ListFilter,
    options: AttractionOptions,
) -> Result<AttractionMetrics, ArgumentError> {
    let contingency = contingency_by_category(edges, categories, scheme, filter)?;
    let rd = relative_deviation(&contingency).ok();
    let edges = rd.as_ref().map(|rd| attraction_edges(rd, options)).unwrap_or_default();
    Ok(AttractionMetrics { contingency, rd, edges })
}

fn analyze_corpus(
    config: &AnalysisConfig,
    store: &Store,
    corpus: &CorpusRecord,
    list_ids: &[&str],
    roster: &Roster,
    scheme: &CategoryScheme,
    lexicon: &StageLexicon,
) -> Result<CorpusMetrics, CliError> {
    let per_list: Vec<Vec<Discussion>> = list_ids
        .iter()
        .map(|l| corpus.discussions.iter().filter(|d| d.list_id == *l).cloned().collect())
        .collect();
    let list_refs: Vec<(&str, &[Discussion])> = list_ids
        .iter()
        .copied()
        .zip(per_list.iter().map(Vec::as_slice))
        .collect();

    let lists = list_refs
        .iter()
        .map(|(l, ds)| list_metrics(config, l, ds))
        .collect::<Result<Vec<_>, _>>()?;
    let common = common_participants(&list_refs)?;
    let pairs = find_parallel_discussions(&per_list[0], &per_list[1], config.thresholds.subject_match())?;
    let cross = cross_participants(&pairs, &corpus.discussions);
    let profiles = participation_profiles(&list_refs, &common, &cross, roster)?;
    let involvement = involvement_by_category(&profiles, list_ids);

    let overrides: BTreeMap<String, String> = lexicon
        .overrides
        .iter()
        .filter(|(id, _)| corpus.discussions.iter().any(|d| &d.discussion_id == *id))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let design_steps = group_by_design_step(&corpus.discussions, lexicon, &overrides)?;
    let timeline = build_timeline(&corpus.discussions, &pairs, &design_steps);

    let graph = build_quote_graph(
        &corpus.selection,
        &corpus.discussions,
        &store.messages,
        roster,
        &config.thresholds.quote_options(),
    );
    let mut quote_edges = graph.edges;
    quote_edges.sort_by(|a, b| {
        (&a.list_id, &a.quoter_message, a.block_index).cmp(&(&b.list_id, &b.quoter_message, b.block_index))
    });

    let mut people: BTreeSet<&ParticipantId> = profiles.iter().map(|p| &p.participant).collect();
    for e in quote_edges.iter().filter(|e| e.resolved()) {
        people.insert(&e.quoter);
        people.insert(&e.quoted);
    }
    let categories = scheme.assign(people, roster, &cross);
    let options = AttractionOptions {
        threshold: config.thresholds.rd_threshold,
        min_cell: config.thresholds.rd_min_cell,
    };
    let attraction_pooled = attraction(&quote_edges, &categories, scheme, &ListFilter::Pooled, options)?;
    let mut attraction_per_list = BTreeMap::new();
    for l in list_ids {
        let m = attraction(
            &quote_edges,
            &categories,
            scheme,
            &ListFilter::List(l.to_string()),
            options,
        )?;
        attraction_per_list.insert(l.to_string(), m);
    }

    Ok(CorpusMetrics {
        name: corpus.selection.name.clone(),
        lists,
        common,
        parallel_pairs: pairs,
        cross,
        profiles,
        involvement,
        pooled_opening_delay_days: mean_opening_delay(&corpus.discussions),
        design_steps,
        timeline,
        quote_edges,
        categories,
        attraction_pooled,
        attraction_per_list,
        contributions: contribution_profiles(roster, &list_refs, &store.revisions),
    })
}

/// Ingest followed by analysis, without touching the filesystem for output.
pub fn run(config: &AnalysisConfig) -> Result<(Store, MetricsBundle), CliError> {
    let store = ingest(config)?;
    let lexicon = load_lexicon(config)?;
    let bundle = analyze(config, &store, &lexicon)?;
    Ok((store, bundle))
}
