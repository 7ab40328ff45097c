import math
import pathlib

import pytest

import kpa

ROOT = pathlib.Path(__file__).resolve().parents[2]
SYNTH = ROOT / "data" / "synthetic"


def row(arg, kp, label, score, topic="t", stance=1):
    return dict(arg_id=arg, key_point_id=kp, topic=topic, stance=stance, label=label, score=score)


def test_average_precision():
    assert kpa.average_precision([1, 0, 1], 2) == pytest.approx(5 / 6, abs=1e-12)
    assert kpa.average_precision([0, 0], 0) is None
    with pytest.raises(ValueError):
        kpa.average_precision([1, 1], 1)


def test_map_score_methods():
    rows = [row(f"a{i}", f"k{i}", r, 1 - 0.1 * i) for i, r in enumerate([1, 0, 1, 0])]
    assert kpa.map_score(rows)["map_strict"] == pytest.approx(5 / 6)
    assert kpa.map_score(rows, method="tophalf")["map_strict"] == pytest.approx(0.5)


def test_undecided_policies():
    rows = [row("a1", "k", 1, 0.9), row("a2", "k", None, 0.8)]
    r = kpa.map_score(rows)
    assert r["map_strict"] == 1.0
    assert r["map_relaxed"] == 1.0
    rows = [row("a1", "k", None, 0.9), row("a2", "k", 1, 0.8)]
    r = kpa.map_score(rows)
    assert r["map_strict"] == pytest.approx(0.5)
    assert r["map_relaxed"] == 1.0


def test_empty_input_is_a_data_error():
    with pytest.raises(kpa.DataError):
        kpa.map_score([])


def test_tag_encoding():
    ranks = kpa.tag_ranks([["aux"] * 10 + ["nsubj"] * 7 + ["amod"] * 3])
    assert ranks == {"aux": 1, "nsubj": 2, "amod": 3}
    counts = {"aux": 2, "nsubj": 1}
    assert kpa.encode_tags(["aux", "nsubj"], counts, 4) == [1, 2, 0, 0]
    assert kpa.encode_tags(["aux", "aux", "aux"], counts, 2) == [1, 1]


def test_tfidf():
    m = kpa.fit_tfidf(["a b", "a c"])
    assert sorted(m.terms) == ["a", "b", "c"]
    v = m.vector("a b")
    assert math.isclose(sum(x * x for x in v), 1.0)
    assert kpa.cosine(v, v) == pytest.approx(1.0)


def test_dataset_stats():
    s = kpa.dataset_stats(str(SYNTH), "train")
    assert s["n_args"] == 30
    assert s["n_kps"] == 9


def small_config():
    return {
        "corpus_dir": str(SYNTH),
        "embeddings": str(SYNTH / "embeddings.jsonl"),
        "features": {"kind": "none"},
        "seeds": [1],
        "train": {"epochs_finetune": 10, "hidden_dims": [4]},
    }


def test_config_round_trip():
    c = kpa.load_config(small_config())
    assert c["features"]["kind"] == "none"
    assert len(kpa.config_hash(small_config())) == 12
    assert kpa.config_hash(c) == kpa.config_hash(small_config())
    with pytest.raises(kpa.ConfigError):
        kpa.load_config({**small_config(), "unknown": 1})


def test_run_experiment(tmp_path):
    r = kpa.run_experiment(small_config(), tmp_path)
    assert len(r["seeds"]) == 1
    assert 0.0 <= r["seeds"][0]["default"]["map_strict"] <= 1.0
    assert (tmp_path / r["config_hash"] / "report.md").exists()


def test_config_file_paths_resolve(tmp_path):
    cfg = ROOT / "configs" / "tfidf.json"
    c = kpa.load_config(cfg)
    assert pathlib.Path(c["corpus_dir"]).resolve() == SYNTH.resolve()
