import json

import pytest

from mtc import dataset as ds
from mtc.cli import main
from mtc.dataset import DEFAULT_DENYLIST


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> ingest -> preprocess, shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    synth_dir = root / "captures"
    assert main(["synth", "--out", str(synth_dir),
                 "--sessions-per-class", "100", "--seed", "7"]) == 0
    manifest = str(synth_dir / "manifest.json")
    corpus = str(root / "corpus.mtc")
    assert main(["ingest", "--manifest", manifest, "--out", corpus]) == 0
    prepped = str(root / "prepped.mtc")
    assert main(["preprocess", "--in", corpus, "--out", prepped,
                 "--min-payload", "784", "--balance", "--seed", "42"]) == 0
    return {"root": root, "manifest": manifest, "corpus": corpus, "prepped": prepped}


def test_help_exits_zero():
    for argv in (
        ["--help"],
        ["ingest", "--help"],
        ["preprocess", "--help"],
        ["stats", "--help"],
        ["featurize", "--help"],
        ["eval", "--help"],
        ["eval", "cv", "--help"],
        ["eval", "zero-day", "--help"],
        ["eval", "incremental", "--help"],
        ["eval", "cross", "--help"],
        ["report", "--help"],
        ["synth", "--help"],
    ):
        assert main(argv) == 0


def test_usage_error_exit_code():
    assert main([]) == 1
    assert main(["eval", "cv"]) == 1  # missing --in
    assert main(["no-such-command"]) == 1


def test_preprocess_invariants(pipeline):
    corpus = ds.load_corpus(pipeline["prepped"])
    counts = corpus.stats().label_counts
    assert counts["benign"] == counts["malware"] > 0
    for s in corpus.sessions:
        assert s.session.total_payload_bytes >= 784
        assert not any(rule.matches(s.session) for rule in DEFAULT_DENYLIST)


def test_stats_runs(pipeline, capsys):
    assert main(["stats", "--in", pipeline["prepped"]]) == 0
    out = capsys.readouterr().out
    assert "benign" in out and "TLS" in out


def test_featurize_roundtrip(pipeline, tmp_path):
    from mtc import features as ft

    tensors = str(tmp_path / "x.ftns")
    labels = str(tmp_path / "x.labels")
    assert main(["featurize", "--in", pipeline["prepped"], "--repr", "raw784",
                 "--out", tensors, "--labels", labels]) == 0
    back = ft.read_tensor_file(tensors, "raw784")
    assert len(back) == len(ds.load_corpus(pipeline["prepped"]))
    assert back[0].dims == (784,)
    assert len(ft.read_label_file(labels)) == len(back)


def test_eval_cv_report(pipeline, tmp_path):
    report = str(tmp_path / "cv.json")
    assert main(["eval", "cv", "--in", pipeline["prepped"], "--model", "rf",
                 "--trees", "15", "--k", "3", "--seed", "5",
                 "--out", report]) == 0
    doc = json.loads(open(report).read())
    body = doc["body"]
    assert body["mean"]["accuracy"] >= 0.99
    assert body["fingerprint"]
    assert body["seed"] == 5
    assert "generated_at" in doc


def test_eval_rerun_byte_identical_body(pipeline, tmp_path):
    argv = ["eval", "cv", "--in", pipeline["prepped"], "--model", "rf",
            "--trees", "10", "--k", "2", "--seed", "3"]
    bodies = []
    for name in ("a.json", "b.json"):
        out = str(tmp_path / name)
        assert main(argv + ["--out", out]) == 0
        doc = json.loads(open(out).read())
        bodies.append(json.dumps(doc["body"], sort_keys=True))
    assert bodies[0] == bodies[1]


def test_eval_zero_day_unknown_family_exit2(pipeline, capsys):
    assert main(["eval", "zero-day", "--in", pipeline["prepped"],
                 "--family", "Cridex", "--model", "dt"]) == 2
    assert "UnknownFamily" in capsys.readouterr().err


def test_eval_zero_day_runs(pipeline, tmp_path):
    report = str(tmp_path / "zd.json")
    assert main(["eval", "zero-day", "--in", pipeline["prepped"],
                 "--family", "gamma", "--model", "rf", "--trees", "15",
                 "--seed", "1", "--out", report]) == 0
    body = json.loads(open(report).read())["body"]
    assert 0.0 <= body["accuracy"] <= 1.0


def test_eval_incremental_runs(pipeline, tmp_path):
    report = str(tmp_path / "inc.json")
    assert main(["eval", "incremental", "--in", pipeline["prepped"],
                 "--order", "alpha,beta", "--model", "dt", "--k", "2",
                 "--out", report]) == 0
    body = json.loads(open(report).read())["body"]
    assert len(body["accuracies"]) == 2


def test_report_renders(pipeline, tmp_path, capsys):
    report = str(tmp_path / "r.json")
    assert main(["eval", "cv", "--in", pipeline["prepped"], "--model", "dt",
                 "--k", "2", "--out", report]) == 0
    capsys.readouterr()
    assert main(["report", "--in", report]) == 0
    out = capsys.readouterr().out
    assert "protocol:" in out and "fingerprint:" in out


def test_data_error_exit_code(tmp_path, capsys):
    missing = str(tmp_path / "nothing.mtc")
    assert main(["stats", "--in", missing]) == 2


def test_external_missing_binary_exit3(pipeline):
    assert main(["eval", "cv", "--in", pipeline["prepped"], "--model", "external",
                 "--exe", "/does/not/exist", "--arch", "m1cnn", "--k", "2"]) == 3
