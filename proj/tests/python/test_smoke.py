import math
import os
import pathlib

import pytest

import fauxcheck

FIXTURES = os.environ.get("FAUXCHECK_FIXTURES")
needs_fixtures = pytest.mark.skipif(not FIXTURES, reason="FAUXCHECK_FIXTURES not set")


def test_tokenize_and_tfidf():
    assert fauxcheck.tokenize("A photo of the Moon-landing!", ["the", "of"]) == ["photo", "moon", "landing"]
    docs = [["moon", "photo"], ["moon", "hoax"], ["beach"]]
    w = fauxcheck.tfidf(["moon", "moon", "hoax", "unseen"], docs)
    assert set(w) == {"moon", "hoax"}
    idf_moon = math.log(4 / 3) + 1
    idf_hoax = math.log(4 / 2) + 1
    norm = math.hypot(2 * idf_moon, idf_hoax)
    assert w["moon"] == pytest.approx(2 * idf_moon / norm, abs=1e-12)
    assert w["hoax"] == pytest.approx(idf_hoax / norm, abs=1e-12)
    assert fauxcheck.cosine(w, w) == pytest.approx(1.0)
    assert fauxcheck.cosine(w, {}) == 0.0


def test_smoothed_average_and_domains():
    assert fauxcheck.smoothed_average([]) == 0.0
    assert fauxcheck.smoothed_average([1.0, 2.0, 3.0]) == pytest.approx(1.5)
    assert fauxcheck.registrable_domain("https://News.Example.com/a") == "example.com"


def test_metrics():
    assert fauxcheck.accuracy([True, False, True, True], [True, True, True, False]) == 50.0
    assert fauxcheck.average_precision([0.9, 0.8, 0.7], [True, False, True]) == pytest.approx(250 / 3)
    with pytest.raises(fauxcheck.DataError):
        fauxcheck.average_precision([0.1], [False])
    assert fauxcheck.softmax_confidence(0.0) == 0.5
    assert fauxcheck.softmax_confidence(1.0, 2.0) == pytest.approx(1 / (1 + math.exp(-1)))


def test_svm():
    rows = [[2.0, 0.0], [1.5, 0.5], [-2.0, 0.0], [-1.0, -1.0]]
    labels = [1, 1, -1, -1]
    m = fauxcheck.train_linear_svm(rows, labels, C=10.0)
    assert m.converged
    for x, y in zip(rows, labels):
        assert m.decision_value(x) * y > 0
        assert (m.confidence(x) > 0.5) == (y > 0)
    with pytest.raises(fauxcheck.DataError):
        fauxcheck.train_linear_svm([[1.0], [2.0]], [1, 1])


def test_errors_share_a_base():
    assert issubclass(fauxcheck.ConfigError, fauxcheck.FauxcheckError)
    with pytest.raises(fauxcheck.ConfigError):
        fauxcheck.run("/nonexistent/config.json")


@needs_fixtures
def test_corpus_and_ela():
    root = pathlib.Path(FIXTURES)
    pairs = fauxcheck.load_corpus(root / "corpus.jsonl")
    assert len(pairs) == 170
    assert {p["label"] for p in pairs} == {"true", "false"}
    assert fauxcheck.validate_corpus(root / "corpus.jsonl") == []
    ela = fauxcheck.compute_ela((root / "images" / "spliced.jpg").read_bytes())
    assert len(ela["difference"]) == ela["width"] * ela["height"] * 3
    assert ela["max"] > 0
    with pytest.raises(fauxcheck.DataError):
        fauxcheck.compute_ela(b"not a jpeg")


@needs_fixtures
def test_run_is_reproducible(tmp_path):
    config = pathlib.Path(FIXTURES) / "config.json"
    a = fauxcheck.run(config, output_dir=tmp_path / "a")
    b = fauxcheck.run(config, output_dir=tmp_path / "b", jobs=2)
    assert pathlib.Path(a["report_json"]).read_bytes() == pathlib.Path(b["report_json"]).read_bytes()
    text = fauxcheck.render_report(a["report_json"])
    assert text.startswith(pathlib.Path(a["table"]).read_text())
