use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

/// Runs a Python snippet against the module, with `tmp` bound to a fresh
/// directory.
fn check(code: &str) {
    let tmp = tempdir();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(crossbound::crossbound)(py);
        let locals = PyDict::new(py);
        locals.set_item("cb", module).unwrap();
        locals.set_item("tmp", tmp.to_str().unwrap()).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, None, Some(&locals)) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
    std::fs::remove_dir_all(&tmp).ok();
}

fn tempdir() -> std::path::PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static N: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "crossbound-py-{}-{}",
        std::process::id(),
        N.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn pipeline_matches_oracle_through_python() {
    check(
        r#"
import os
c = cb.synth(11, '{"planted_cross_count": 2}')
c.write(tmp)
cfg = cb.Config.load(os.path.join(tmp, "config.json"))
store, bundle = cb.run(cfg)
assert len(store) > 0
assert bundle.compare(c.oracle()) == []
assert bundle.cross(cfg.corpus_names[0]) == c.planted_cross
again = cb.Bundle.from_json(bundle.to_json())
d = again.compare(bundle, 0.0); assert d == [], d[:5]
files = bundle.render("csv")
assert "table1.csv" in files and isinstance(files["table1.csv"], bytes)
"#,
    );
}

#[test]
fn errors_map_to_python_exceptions() {
    check(
        r#"
import os
try:
    cb.Config.load(os.path.join(tmp, "missing.json"))
    raise SystemExit("no error")
except cb.InputError as e:
    assert "missing.json" in str(e)
try:
    cb.Store.load(tmp)
    raise SystemExit("no error")
except cb.StoreError:
    pass
assert issubclass(cb.StoreError, cb.CrossboundError)
try:
    cb.third_quartile([])
    raise SystemExit("no error")
except ValueError:
    pass
try:
    cb.synth(1, '{"planted_cross_count": 900}')
    raise SystemExit("no error")
except ValueError:
    pass
"#,
    );
}

#[test]
fn small_functions() {
    check(
        r#"
assert cb.third_quartile([1, 1, 1, 1, 2, 2, 3, 5]) == 2
assert cb.percent(1, 3) == 33 and cb.percent(1, 0) is None
assert cb.relative_deviation([[10, 0], [0, 10]]) == [[1.0, -1.0], [-1.0, 1.0]]
mbox = b"From a@x Mon Jan  1 00:00:00 2001\nFrom: A <a@x>\nDate: Mon, 1 Jan 2001 00:00:00 +0000\nMessage-ID: <m1@x>\nSubject: hi\n\nbody\n\nFrom b@x Mon Jan  1 00:00:00 2001\nFrom: B <b@x>\nSubject: no date\n\nbody\n"
msgs, diags = cb.parse_mbox(mbox, "l")
assert [m.message_id for m in msgs] == ["m1@x"]
assert len(diags) == 1 and diags[0].offset is not None
"#,
    );
}
