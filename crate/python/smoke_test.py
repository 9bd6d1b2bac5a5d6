"""Smoke test for the crossbound extension module.

Build and run from the repository root:

    cargo build --release -p crossbound-py --features extension-module
    cp target/release/libcrossbound.so python/crossbound.so
    python3 python/smoke_test.py
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import crossbound as cb  # noqa: E402


def main():
    assert cb.third_quartile([1, 1, 1, 1, 2, 2, 3, 5]) == 2
    assert cb.percent(18, 66) == 27
    assert cb.relative_deviation([[10, 0], [0, 10]])[0] == [1.0, -1.0]

    corpus = cb.synth(7, json.dumps({"planted_cross_count": 3, "malformed_rate": 0.05}))
    with tempfile.TemporaryDirectory() as tmp:
        corpus.write(tmp)
        config = cb.Config.load(os.path.join(tmp, "config.json"))
        store = cb.ingest(config)
        store.save(os.path.join(tmp, "store"))
        store = cb.Store.load(os.path.join(tmp, "store"))
        bundle = cb.analyze(config, store)

        diffs = bundle.compare(corpus.oracle())
        assert diffs == [], diffs[:10]
        name = config.corpus_names[0]
        assert bundle.cross(name) == corpus.planted_cross

        written = bundle.write_reports(os.path.join(tmp, "report"))
        assert "table1.csv" in written

        print(f"messages: {len(store)}, diagnostics: {len(store.diagnostics())}")
        print(f"cross participants: {', '.join(bundle.cross(name))}")
        print(f"reports: {', '.join(written)}")

    try:
        cb.Store.load("/nonexistent")
    except cb.StoreError:
        pass
    else:
        raise AssertionError("expected StoreError")
    print("smoke test ok")


if __name__ == "__main__":
    main()
