//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines show up in plain `cargo test` output.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use crossbound_core::attraction::{relative_deviation, ContingencyTable};
use crossbound_core::bundle::compare_bundles;
use crossbound_core::ingest::{parse_revision_log, Roster, RosterEntry, DEFAULT_CREDIT_PATTERNS};
use crossbound_core::metrics::{classify_regularity, mean_opening_delay, third_quartile, Regularity};
use crossbound_core::model::{Alias, ParticipantId, Role, Space};
use crossbound_core::report::{percent_label, table2_csv};
use crossbound_core::revisions::{credited_contributions, effective_revision_counts};
use crossbound_core::store::Store;
use crossbound_core::synth::{generate_corpus, oracle_metrics, GroundTruth, SynthParams};
use crossbound_core::thread::Discussion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<String, String>;

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn oracle_equivalence() -> Check {
    for seed in 0..20 {
        let run = synth_run(&varied_params(seed));
        let diffs = compare_bundles(&run.bundle, &oracle_metrics(&run.corpus.ground_truth), 1e-9);
        ensure(diffs.is_empty(), || {
            format!("seed {seed}: {} differences, first {}", diffs.len(), diffs[0])
        })?;
    }
    let big = SynthParams {
        seed: 1000,
        n_discussions_per_list: 100,
        parallel_pair_count: 10,
        planted_cross_count: 5,
        offtopic_per_list: 5,
        ..SynthParams::default()
    };
    let t = Instant::now();
    let run = synth_run(&big);
    let elapsed = t.elapsed().as_secs_f64();
    let written = run.corpus.ground_truth.messages_written;
    ensure(written >= 1000, || format!("large corpus only has {written} messages"))?;
    let diffs = compare_bundles(&run.bundle, &oracle_metrics(&run.corpus.ground_truth), 1e-9);
    ensure(diffs.is_empty(), || format!("large corpus: {}", diffs[0]))?;
    ensure(elapsed < 10.0, || format!("{written} messages took {elapsed:.2}s"))?;
    Ok(format!(
        "20 seeds identical to oracle; {written}-message corpus in {elapsed:.2}s"
    ))
}

fn cross_recovery() -> Check {
    let mut seen = Vec::new();
    for (size, pairs) in [(0, 3), (0, 0), (1, 2), (5, 3)] {
        let run = synth_run(&SynthParams {
            seed: 7,
            planted_cross_count: size,
            parallel_pair_count: pairs,
            ..SynthParams::default()
        });
        let gt = &run.corpus.ground_truth;
        let got = &run.bundle.corpora[0].cross;
        ensure(gt.cross.len() == size, || {
            format!("generator planted {} not {size}", gt.cross.len())
        })?;
        ensure(*got == gt.cross, || {
            format!("size {size}: recovered {got:?}, planted {:?}", gt.cross)
        })?;
        seen.push(got.len());
    }
    Ok(format!("recovered cross sets of sizes {seen:?}"))
}

fn quote_attribution() -> Check {
    let (mut ok, mut total, mut truncated, mut violations) = (0, 0, 0, 0);
    for seed in 0..10 {
        let run = synth_run(&SynthParams {
            seed,
            quote_rate: 0.8,
            quote_noise: 0.1,
            ..SynthParams::default()
        });
        let (c, t) = quote_accuracy(&run);
        ok += c;
        total += t;
        truncated += run.corpus.ground_truth.quotes.iter().filter(|q| q.truncated).count();
        violations += temporal_violations(&run);
    }
    ensure(truncated > 0, || "no truncated quotes were planted".into())?;
    let noisy = ok as f64 / total as f64;
    ensure(noisy >= 0.95, || {
        format!("noise 0.1 accuracy {noisy:.4} ({ok}/{total})")
    })?;
    let (mut ok0, mut total0) = (0, 0);
    for seed in 0..10 {
        let run = synth_run(&SynthParams {
            seed,
            quote_rate: 0.8,
            ..SynthParams::default()
        });
        let (c, t) = quote_accuracy(&run);
        ok0 += c;
        total0 += t;
        violations += temporal_violations(&run);
    }
    ensure(ok0 == total0, || format!("noise 0 accuracy {ok0}/{total0}"))?;
    ensure(violations == 0, || format!("{violations} edges point forward in time"))?;
    Ok(format!(
        "noise 0.1: {ok}/{total} ({:.1}%, {truncated} truncated); noise 0: {ok0}/{total0}; no backward-time violations",
        100.0 * noisy
    ))
}

fn regularity_arithmetic() -> Check {
    let classify = |counts: &[usize]| {
        let m: BTreeMap<ParticipantId, usize> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (ParticipantId::new(format!("p{i:02}")), c))
            .collect();
        let regular: Vec<usize> = classify_regularity(&m)
            .iter()
            .filter(|(_, r)| **r == Regularity::Regular)
            .map(|(p, _)| m[p])
            .collect();
        regular
    };
    let two = [1, 1, 1, 1, 2, 2, 3, 5];
    let one = [1, 1, 1, 1, 1, 1, 2, 4];
    ensure(third_quartile(&two) == Ok(2), || {
        "Q3 of the first fixture is not 2".into()
    })?;
    ensure(third_quartile(&one) == Ok(1), || {
        "Q3 of the second fixture is not 1".into()
    })?;
    ensure(classify(&two) == vec![3, 5], || {
        format!("Q3=2 regulars {:?}", classify(&two))
    })?;
    ensure(classify(&one) == vec![2, 4], || {
        format!("Q3=1 regulars {:?}", classify(&one))
    })?;
    // A participant exactly at Q3 stays occasional.
    let at = [2, 2, 2, 2];
    ensure(classify(&at).is_empty(), || {
        "count equal to Q3 classified regular".into()
    })?;

    ensure(percent_label(18, 66) == "27%", || percent_label(18, 66))?;
    ensure(percent_label(14, 48) == "29%", || percent_label(14, 48))?;
    let mut bundle = synth_run(&SynthParams::default()).bundle;
    bundle.corpora.truncate(1);
    bundle.corpora[0].name = "unsuccessful".into();
    let list = &mut bundle.corpora[0].lists[0];
    list.list_id = "py-list".into();
    (list.participants, list.regular, list.occasional, list.q3) = (66, 18, 48, Some(2));
    let csv = String::from_utf8(table2_csv(&bundle)).expect("utf-8");
    ensure(csv.contains("\nunsuccessful,py-list,regular,18,27%,"), || csv.clone())?;
    Ok("Q3 fixtures give 2 and 1 with strict '>' split; 18/66 renders 27%, 14/48 renders 29%".into())
}

fn rd_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(2..=6);
        let counts: Vec<Vec<u64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.gen_bool(0.2) { 0 } else { rng.gen_range(0..60) })
                    .collect()
            })
            .collect();
        let labels: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let table = ContingencyTable::from_counts(labels, counts).map_err(|e| e.to_string())?;
        if table.total == 0 {
            continue;
        }
        let rd = relative_deviation(&table).map_err(|e| e.to_string())?;
        let (rows, cols) = (table.row_totals(), table.col_totals());
        for i in 0..n {
            let er: f64 = rd.expected[i].iter().sum();
            let ec: f64 = rd.expected.iter().map(|r| r[i]).sum();
            ensure(close(er, rows[i] as f64, 1e-9), || {
                format!("row margin {er} vs {}", rows[i])
            })?;
            ensure(close(ec, cols[i] as f64, 1e-9), || {
                format!("column margin {ec} vs {}", cols[i])
            })?;
        }
        let weighted: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| rd.values[i][j].map(|v| v * rd.expected[i][j]))
            .sum();
        ensure(close(weighted, 0.0, 1e-9 * table.total as f64), || {
            format!("weighted sum {weighted}")
        })?;
        checked += 1;
    }

    for _ in 0..20 {
        let n = rng.gen_range(2..=5);
        let a: Vec<u64> = (0..n).map(|_| rng.gen_range(1..10)).collect();
        let b: Vec<u64> = (0..n).map(|_| rng.gen_range(1..10)).collect();
        let counts = a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect();
        let table = ContingencyTable::from_counts((0..n).map(|i| i.to_string()).collect(), counts)
            .map_err(|e| e.to_string())?;
        let rd = relative_deviation(&table).map_err(|e| e.to_string())?;
        let worst = rd.values.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure(worst < 1e-12, || format!("independence table has |RD| {worst}"))?;
    }

    let table = ContingencyTable::from_counts(vec!["a".into(), "b".into()], vec![vec![10, 0], vec![0, 10]])
        .map_err(|e| e.to_string())?;
    let rd = relative_deviation(&table).map_err(|e| e.to_string())?;
    let want = vec![vec![Some(1.0), Some(-1.0)], vec![Some(-1.0), Some(1.0)]];
    ensure(rd.values == want, || format!("{:?}", rd.values))?;
    Ok("margins and zero weighted sum on 100 tables; independence tables give RD 0; [[10,0],[0,10]] gives [[1,-1],[-1,1]]".into())
}

fn discussion_at(i: usize, start: i64) -> Discussion {
    Discussion {
        discussion_id: format!("l:d{i}"),
        list_id: "l".into(),
        subject_key: format!("d{i}"),
        messages: Vec::new(),
        participants: BTreeSet::new(),
        start,
        end: start,
        reply_edges: Vec::new(),
    }
}

fn delay_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let n = rng.gen_range(0..40);
        let starts: Vec<i64> = (0..n).map(|_| rng.gen_range(1_000_000_000..1_200_000_000)).collect();
        let discussions: Vec<Discussion> = starts.iter().enumerate().map(|(i, &s)| discussion_at(i, s)).collect();
        let got = mean_opening_delay(&discussions);
        if n < 2 {
            ensure(got.is_none(), || format!("n = {n} gave {got:?}"))?;
            continue;
        }
        let (lo, hi) = (starts.iter().min().unwrap(), starts.iter().max().unwrap());
        let want = (hi - lo) as f64 / (n - 1) as f64 / 86_400.0;
        ensure(got == Some(want), || format!("n = {n}: {got:?} vs {want}"))?;
    }
    Ok("100 random date sets match (max - min)/(n - 1) exactly; n < 2 undefined".into())
}

fn revision_arithmetic() -> Check {
    let person = |name: &str, role: Role, handle: &str| RosterEntry {
        canonical_name: name.into(),
        role,
        aliases: vec![Alias {
            name: handle.into(),
            email: String::new(),
        }],
    };
    let roster = Roster::new(vec![
        person("Ada Admin", Role::Administrator, "aadmin"),
        person("Cam Champion", Role::User, "cchamp"),
        person("Eve Editor", Role::Developer, "eeditor"),
        person("Dan Dev", Role::Developer, "ddev"),
        person("Lee Lead", Role::ProjectLeader, "llead"),
    ])
    .map_err(|e| e.to_string())?;
    let line = |i: usize, space: &str, author: &str, message: &str| {
        format!(
            r#"{{"revision":"{i}","space":"{space}","path":"x","author":"{author}","date":"2004-0{}-01T00:00:00Z","message":"{message}"}}"#,
            1 + i % 9
        )
    };
    let mut implementation = Vec::new();
    for i in 0..34 {
        implementation.push(line(i, "Implementation", "aadmin", "tidy up"));
    }
    implementation.push(line(34, "Implementation", "cchamp", "first cut"));
    for i in 35..38 {
        implementation.push(line(i, "Implementation", "ddev", "Apply Cam Champion's changes"));
    }
    for i in 38..44 {
        implementation.push(line(
            i,
            "Implementation",
            if i % 2 == 0 { "ddev" } else { "llead" },
            "misc",
        ));
    }
    let mut documentation = Vec::new();
    for i in 0..4 {
        documentation.push(line(i, "Documentation", "eeditor", "Update from Cam Champion"));
    }
    documentation.push(line(4, "Documentation", "eeditor", "typo"));
    for i in 5..9 {
        documentation.push(line(
            i,
            "Documentation",
            if i % 2 == 0 { "llead" } else { "aadmin" },
            "wording",
        ));
    }
    let patterns: Vec<String> = DEFAULT_CREDIT_PATTERNS.iter().map(|s| s.to_string()).collect();
    let parse = |lines: &[String], space| {
        parse_revision_log(lines.join("\n").as_bytes(), space, &patterns, &roster).map(|p| p.records)
    };
    let mut records = parse(&implementation, Space::Implementation).map_err(|e| e.to_string())?;
    records.extend(parse(&documentation, Space::Documentation).map_err(|e| e.to_string())?);

    let admin = ParticipantId::new("Ada Admin");
    let champ = ParticipantId::new("Cam Champion");
    let editor = ParticipantId::new("Eve Editor");
    let imp = effective_revision_counts(&records, Some(Space::Implementation));
    let imp_credit = credited_contributions(&records, Some(Space::Implementation));
    let doc = effective_revision_counts(&records, Some(Space::Documentation));
    let doc_credit = credited_contributions(&records, Some(Space::Documentation));

    let a = imp.counts.get(&admin).copied().unwrap_or(0);
    let admin_label = format!("{} ({a}/{})", percent_label(a as u64, imp.total as u64), imp.total);
    ensure(admin_label == "77% (34/44)", || admin_label.clone())?;
    let c = imp_credit.combined.get(&champ).copied().unwrap_or(0);
    let champ_label = format!("{} ({c}/{})", percent_label(c as u64, imp.total as u64), imp.total);
    ensure(champ_label == "9% (4/44)", || champ_label.clone())?;
    ensure(
        imp.counts.get(&champ) == Some(&1) && imp_credit.credited.get(&champ) == Some(&3),
        || "champion should be 1 effective + 3 credited".into(),
    )?;
    let e = doc.counts.get(&editor).copied().unwrap_or(0);
    ensure(e == 5 && doc.total == 9, || format!("editor made {e} of {}", doc.total))?;
    let dc = doc_credit.credited.get(&champ).copied().unwrap_or(0);
    ensure(dc == 4, || format!("champion credited on {dc} documentation revisions"))?;
    Ok(format!(
        "{admin_label}; champion {champ_label}; editor {e} of {}, 4 crediting the champion",
        doc.total
    ))
}

fn determinism() -> Check {
    let params = r#"{"n_discussions_per_list": 12, "quote_noise": 0.1, "malformed_rate": 0.02}"#;
    let (a_root, b_root) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (a, outs_a) = cli_pipeline(a_root.path(), 11, params);
    let (b, outs_b) = cli_pipeline(b_root.path(), 11, params);
    for o in outs_a.iter().chain(&outs_b) {
        ensure(o.status.code() == Some(0), || {
            String::from_utf8_lossy(&o.stderr).into_owned()
        })?;
    }
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    ensure(ta.keys().eq(tb.keys()), || "different file sets".into())?;
    for (name, bytes) in &ta {
        ensure(tb[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    let stored = ta.keys().filter(|k| k.starts_with("out/store/")).count();
    let reports = ta.keys().filter(|k| k.starts_with("out/report/")).count();
    ensure(stored > 0 && reports > 0, || "missing store or report files".into())?;
    // Re-running ingest in place must reproduce the same store.
    let config = a.join("config.json");
    let again = crossbound(&["ingest", "--config", path_str(&config)]);
    ensure(again.status.success(), || "second ingest failed".into())?;
    ensure(read_tree(&a) == ta, || "re-ingest changed the store".into())?;
    Ok(format!(
        "{} files byte-identical across runs ({stored} store, {reports} report)",
        ta.len()
    ))
}

fn robustness() -> Check {
    let root = tempfile::tempdir().unwrap();
    let (dir, outs) = cli_pipeline(
        root.path(),
        5,
        r#"{"malformed_rate": 0.05, "n_discussions_per_list": 20}"#,
    );
    for o in &outs {
        ensure(o.status.code() == Some(0), || {
            format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr))
        })?;
    }
    let gt: GroundTruth =
        serde_json::from_slice(&std::fs::read(dir.join("ground_truth.json")).unwrap()).map_err(|e| e.to_string())?;
    let share = gt.malformed_messages as f64 / (gt.messages_written + gt.malformed_messages) as f64;
    ensure(gt.malformed_messages > 0, || "no malformed messages planted".into())?;
    let store = Store::load(&dir.join("out/store")).map_err(|e| e.to_string())?;
    let rejected: Vec<_> = store
        .diagnostics
        .iter()
        .filter(|d| d.reason.contains("Date") || d.reason.contains("From"))
        .collect();
    ensure(rejected.len() == gt.malformed_messages, || {
        format!("{} diagnostics for {} malformed", rejected.len(), gt.malformed_messages)
    })?;
    ensure(rejected.iter().all(|d| d.offset.is_some()), || {
        "diagnostic without offset".into()
    })?;
    ensure(store.messages.len() == gt.messages_written, || {
        "well-formed messages were lost".into()
    })?;
    Ok(format!(
        "{} of {} messages malformed ({:.1}%), exit 0 throughout, one diagnostic each",
        gt.malformed_messages,
        gt.messages_written + gt.malformed_messages,
        100.0 * share
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("cross-participant recovery", cross_recovery),
        ("quote attribution", quote_attribution),
        ("regularity arithmetic", regularity_arithmetic),
        ("RD properties", rd_properties),
        ("delay identity", delay_identity),
        ("revision arithmetic", revision_arithmetic),
        ("determinism", determinism),
        ("robustness", robustness),
    ];
    // Sanity: the generator rejects what the suite relies on rejecting.
    assert!(generate_corpus(&SynthParams {
        planted_cross_count: 1000,
        ..SynthParams::default()
    })
    .is_err());

    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
