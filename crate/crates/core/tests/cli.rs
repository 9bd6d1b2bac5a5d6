mod common;

use std::path::{Path, PathBuf};

use crossbound_core::bundle::MetricsBundle;
use crossbound_core::store::Store;
use serde_json::{json, Value};
use tempfile::TempDir;

use common::*;

/// A synthetic corpus written through the binary, ready for ingest.
fn corpus(seed: u64, params: &str) -> (TempDir, PathBuf) {
    let root = tempfile::tempdir().unwrap();
    std::fs::write(root.path().join("p.json"), params).unwrap();
    let dir = root.path().join("c");
    let p = root.path().join("p.json");
    let out = crossbound(&[
        "synth",
        "--seed",
        &seed.to_string(),
        "--params",
        path_str(&p),
        "--out",
        path_str(&dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (root, dir)
}

fn edit_config(dir: &Path, f: impl FnOnce(&mut Value)) -> PathBuf {
    let path = dir.join("config.json");
    let mut v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(&path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
    path
}

fn run(cmd: &str, config: &Path, extra: &[&str]) -> (i32, String) {
    let mut args = vec![cmd, "--config", path_str(config)];
    args.extend_from_slice(extra);
    let out = crossbound(&args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn missing_roster_is_exit_2_naming_the_file() {
    let (_root, dir) = corpus(1, "{}");
    std::fs::remove_file(dir.join("roster.json")).unwrap();
    let (code, err) = run("ingest", &dir.join("config.json"), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("roster.json"), "{err}");
}

#[test]
fn missing_archive_is_exit_2_naming_the_file() {
    let (_root, dir) = corpus(1, "{}");
    let config = edit_config(&dir, |v| v["lists"][1]["archives"] = json!(["gone.mbox"]));
    let (code, err) = run("ingest", &config, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("gone.mbox"), "{err}");
}

#[test]
fn missing_config_and_bad_usage_are_exit_2() {
    assert_eq!(run("ingest", Path::new("/nonexistent/config.json"), &[]).0, 2);
    assert_eq!(crossbound(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        crossbound(&["synth", "--seed", "x", "--out", "/tmp"]).status.code(),
        Some(2)
    );
    assert_eq!(crossbound(&["--help"]).status.code(), Some(0));
}

#[test]
fn empty_archives_give_an_empty_store() {
    let (_root, dir) = corpus(2, "{}");
    for f in [
        "synth-list.mbox",
        "synth-dev.mbox",
        "documentation.log",
        "implementation.log",
    ] {
        std::fs::write(dir.join(f), b"").unwrap();
    }
    let config = dir.join("config.json");
    assert_eq!(run("ingest", &config, &[]).0, 0);
    let store = Store::load(&dir.join("out/store")).unwrap();
    assert!(store.messages.is_empty() && store.revisions.is_empty());
    assert_eq!(run("analyze", &config, &[]).0, 0);
    assert_eq!(run("report", &config, &[]).0, 0);
    let rows = csv_rows(&dir.join("out/report/table1.csv"));
    assert!(
        rows.iter().all(|r| r[2] == "0" && r[3] == "0" && r[4] == "0"),
        "{rows:?}"
    );
}

#[test]
fn one_empty_list_has_no_common_cross_or_delay() {
    let (_root, dir) = corpus(3, "{}");
    std::fs::write(dir.join("synth-dev.mbox"), b"").unwrap();
    let config = dir.join("config.json");
    assert_eq!(run("ingest", &config, &[]).0, 0);
    assert_eq!(run("analyze", &config, &[]).0, 0);
    let bundle = MetricsBundle::load(&dir.join("out/bundle.json")).unwrap();
    let c = &bundle.corpora[0];
    assert!(c.common.is_empty() && c.cross.is_empty() && c.parallel_pairs.is_empty());
    let dev = c.lists.iter().find(|l| l.list_id == "synth-dev").unwrap();
    assert_eq!(dev.discussions, 0);
    assert_eq!(dev.mean_opening_delay_days, None);
    assert_eq!(dev.q3, None);
}

#[test]
fn two_corpora_give_two_sections() {
    let (_root, dir) = corpus(4, "{}");
    let config = edit_config(&dir, |v| {
        let mut second = v["corpora"][0].clone();
        second["name"] = json!("early");
        second["date_to"] = json!("2003-02-15");
        v["corpora"].as_array_mut().unwrap().push(second);
    });
    for cmd in ["ingest", "analyze", "report"] {
        let (code, err) = run(cmd, &config, &[]);
        assert_eq!(code, 0, "{cmd}: {err}");
    }
    let bundle = MetricsBundle::load(&dir.join("out/bundle.json")).unwrap();
    let names: Vec<&str> = bundle.corpora.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["synthetic", "early"]);
    let total = |i: usize| bundle.corpora[i].lists.iter().map(|l| l.discussions).sum::<usize>();
    assert!(total(1) < total(0));
    let rows = csv_rows(&dir.join("out/report/table1.csv"));
    assert_eq!(rows.len(), 4);
}

#[test]
fn store_problems_are_exit_3() {
    let (_root, dir) = corpus(5, "{}");
    let config = dir.join("config.json");
    assert_eq!(run("analyze", &config, &[]).0, 3, "analyze before ingest");
    assert_eq!(run("report", &config, &[]).0, 3, "report before analyze");
    assert_eq!(run("ingest", &config, &[]).0, 0);

    let messages = dir.join("out/store/messages.json");
    let original = std::fs::read(&messages).unwrap();
    std::fs::write(&messages, b"[]\n").unwrap();
    let (code, err) = run("analyze", &config, &[]);
    assert_eq!(code, 3);
    assert!(err.contains("digest"), "{err}");
    std::fs::write(&messages, &original).unwrap();

    let manifest = dir.join("out/store/manifest.json");
    let text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(&manifest, text.replace("crossbound-store/1", "crossbound-store/0")).unwrap();
    assert_eq!(run("analyze", &config, &[]).0, 3);
    std::fs::write(&manifest, text).unwrap();

    assert_eq!(run("analyze", &config, &[]).0, 0);
    let bundle = dir.join("out/bundle.json");
    let text = std::fs::read_to_string(&bundle).unwrap();
    std::fs::write(&bundle, text.replace("crossbound-bundle/1", "crossbound-bundle/9")).unwrap();
    let (code, err) = run("report", &config, &[]);
    assert_eq!(code, 3);
    assert!(err.contains("schema"), "{err}");
}

#[test]
fn unknown_format_is_exit_2() {
    let (_root, dir) = corpus(6, "{}");
    let config = dir.join("config.json");
    assert_eq!(run("ingest", &config, &[]).0, 0);
    assert_eq!(run("analyze", &config, &[]).0, 0);
    let (code, err) = run("report", &config, &["--format", "csv,svg"]);
    assert_eq!(code, 2);
    assert!(err.contains("svg"), "{err}");
}

#[test]
fn format_selection_and_out_override() {
    let (root, dir) = corpus(7, "{}");
    let config = dir.join("config.json");
    let out = root.path().join("elsewhere");
    for cmd in ["ingest", "analyze"] {
        assert_eq!(run(cmd, &config, &["--out", path_str(&out)]).0, 0);
    }
    assert_eq!(
        run("report", &config, &["--out", path_str(&out), "--format", "dot"]).0,
        0
    );
    let files: Vec<String> = read_tree(&out.join("report")).into_keys().collect();
    assert_eq!(files, ["attraction.dot"]);
    assert!(!dir.join("out").exists());
}

#[test]
fn csv_tables_round_trip_to_the_bundle() {
    let root = tempfile::tempdir().unwrap();
    let (dir, outs) = cli_pipeline(root.path(), 8, r#"{"planted_cross_count": 3}"#);
    assert!(outs.iter().all(|o| o.status.success()));
    let bundle = MetricsBundle::load(&dir.join("out/bundle.json")).unwrap();
    let report = dir.join("out/report");
    let c = &bundle.corpora[0];

    let t1 = csv_rows(&report.join("table1.csv"));
    for (row, l) in t1.iter().zip(&c.lists) {
        assert_eq!(row[1], l.list_id);
        assert_eq!(row[2].parse::<usize>().unwrap(), l.discussions);
        assert_eq!(row[3].parse::<usize>().unwrap(), l.participants);
        assert_eq!(row[4].parse::<usize>().unwrap(), l.messages);
    }

    let t2 = csv_rows(&report.join("table2.csv"));
    for l in &c.lists {
        let get = |class: &str| {
            t2.iter()
                .find(|r| r[1] == l.list_id && r[2] == class)
                .map(|r| r[3].parse::<usize>().unwrap())
                .unwrap()
        };
        assert_eq!((get("regular"), get("occasional")), (l.regular, l.occasional));
    }

    let t3 = csv_rows(&report.join("table3.csv"));
    assert_eq!(t3.len(), c.involvement.len());
    for (row, inv) in t3.iter().zip(&c.involvement) {
        assert_eq!(row[2], inv.category.to_string());
        assert_eq!(row[4].parse::<usize>().unwrap(), inv.members);
        assert_eq!(row[5].parse::<usize>().unwrap(), inv.messages);
        assert_eq!(row[6].parse::<f64>().ok(), inv.mean);
    }

    let rd = csv_rows(&report.join("rd.csv"));
    let pooled = c.attraction_pooled.rd.as_ref().unwrap();
    let n = pooled.labels.len();
    for (k, row) in rd.iter().filter(|r| r[1] == "pooled").enumerate() {
        let (i, j) = (k / n, k % n);
        assert_eq!(row[4].parse::<u64>().unwrap(), pooled.counts[i][j]);
        assert_eq!(row[5].parse::<f64>().unwrap(), pooled.expected[i][j]);
        assert_eq!(row[6].parse::<f64>().ok(), pooled.values[i][j]);
    }

    let contributions = csv_rows(&report.join("contributions.csv"));
    assert_eq!(contributions.len(), c.contributions.len());
    let timeline: Value = serde_json::from_slice(&std::fs::read(report.join("timeline.json")).unwrap()).unwrap();
    assert_eq!(
        timeline["synthetic"]["discussions"].as_array().unwrap().len(),
        c.timeline.len()
    );
    let dot = std::fs::read_to_string(report.join("attraction.dot")).unwrap();
    assert!(dot.starts_with("digraph \"synthetic\" {"));
    assert_eq!(
        dot.matches(" -> ").count(),
        c.attraction_pooled.edges.len() + c.attraction_per_list.values().map(|m| m.edges.len()).sum::<usize>()
    );
}

#[test]
fn toml_params_for_synth() {
    let root = tempfile::tempdir().unwrap();
    let p = root.path().join("p.toml");
    std::fs::write(
        &p,
        "n_discussions_per_list = 4\nparallel_pair_count = 1\nplanted_cross_count = 1\n",
    )
    .unwrap();
    let out = root.path().join("c");
    let o = crossbound(&[
        "synth",
        "--seed",
        "3",
        "--params",
        path_str(&p),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success());
    std::fs::write(&p, "no_such_field = 1\n").unwrap();
    let o = crossbound(&[
        "synth",
        "--seed",
        "3",
        "--params",
        path_str(&p),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&p, "planted_cross_count = 900\n").unwrap();
    let o = crossbound(&[
        "synth",
        "--seed",
        "3",
        "--params",
        path_str(&p),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
