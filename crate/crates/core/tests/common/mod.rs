#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crossbound_core::bundle::MetricsBundle;
use crossbound_core::config::AnalysisConfig;
use crossbound_core::model::MessageKey;
use crossbound_core::pipeline;
use crossbound_core::store::Store;
use crossbound_core::synth::{generate_corpus, SynthCorpus, SynthParams, CONFIG_FILE};
use tempfile::TempDir;

pub struct SynthRun {
    pub corpus: SynthCorpus,
    pub store: Store,
    pub bundle: MetricsBundle,
    pub dir: TempDir,
}

pub fn synth_run(params: &SynthParams) -> SynthRun {
    let corpus = generate_corpus(params).expect("feasible params");
    let dir = tempfile::tempdir().expect("tempdir");
    corpus.write(dir.path()).expect("write corpus");
    let config = AnalysisConfig::load(&dir.path().join(CONFIG_FILE)).expect("generated config loads");
    let (store, bundle) = pipeline::run(&config).expect("pipeline runs");
    SynthRun {
        corpus,
        store,
        bundle,
        dir,
    }
}

/// Params varied by seed so that equivalence runs cover different shapes.
pub fn varied_params(seed: u64) -> SynthParams {
    let k = seed as usize;
    SynthParams {
        seed,
        n_discussions_per_list: 6 + k % 7,
        parallel_pair_count: 1 + k % 4,
        planted_cross_count: k % 5,
        quote_rate: [0.2, 0.5, 0.8, 1.0][k % 4],
        quote_noise: 0.0,
        message_rate: 3.0 + (k % 5) as f64,
        header_loss_rate: [0.0, 0.1, 0.3][k % 3],
        nested_quote_rate: [0.0, 0.3, 0.6][(k + 1) % 3],
        common_rate: [0.1, 0.3, 0.6][(k + 2) % 3],
        hint_rate: [0.0, 0.5, 1.0][k % 3],
        credit_rate: [0.0, 0.2, 0.5][(k + 1) % 3],
        ..SynthParams::default()
    }
}

/// (correct, planted) quote attributions: a planted quote counts as correct
/// when the pipeline edge at the same block resolves to the planted source.
pub fn quote_accuracy(run: &SynthRun) -> (usize, usize) {
    let got: BTreeMap<(&str, &str, usize), Option<&MessageKey>> = run.bundle.corpora[0]
        .quote_edges
        .iter()
        .map(|e| {
            (
                (e.list_id.as_str(), e.quoter_message.as_str(), e.block_index),
                e.quoted_message.as_ref(),
            )
        })
        .collect();
    let planted = &run.corpus.ground_truth.quotes;
    let correct = planted
        .iter()
        .filter(|q| {
            got.get(&(q.list_id.as_str(), q.message_id.as_str(), q.block_index))
                .is_some_and(|src| *src == Some(&q.source))
        })
        .count();
    (correct, planted.len())
}

/// Resolved edges whose source is not strictly earlier than the quoter.
pub fn temporal_violations(run: &SynthRun) -> usize {
    let dates: BTreeMap<(&str, &str), i64> = run
        .store
        .messages
        .iter()
        .map(|m| ((m.list_id.as_str(), m.message_id.as_str()), m.date))
        .collect();
    run.bundle
        .corpora
        .iter()
        .flat_map(|c| &c.quote_edges)
        .filter(|e| {
            let Some(src) = &e.quoted_message else { return false };
            let quoter = dates[&(e.list_id.as_str(), e.quoter_message.as_str())];
            let quoted = dates[&(src.list_id.as_str(), src.message_id.as_str())];
            quoted >= quoter
        })
        .count()
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_crossbound"))
}

pub fn crossbound(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Every file under `dir`, keyed by path relative to it.
pub fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).expect("readable dir").flatten().collect();
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// synth → ingest → analyze → report through the binary. Returns the
/// corpus directory; outputs land in `<dir>/out`.
pub fn cli_pipeline(root: &Path, seed: u64, params_json: &str) -> (PathBuf, Vec<Output>) {
    let params = root.join("params.json");
    std::fs::write(&params, params_json).expect("write params");
    let corpus = root.join("corpus");
    let seed = seed.to_string();
    let mut outputs = vec![crossbound(&[
        "synth",
        "--seed",
        &seed,
        "--params",
        path_str(&params),
        "--out",
        path_str(&corpus),
    ])];
    let config = corpus.join(CONFIG_FILE);
    for cmd in ["ingest", "analyze", "report"] {
        outputs.push(crossbound(&[cmd, "--config", path_str(&config)]));
    }
    (corpus, outputs)
}
