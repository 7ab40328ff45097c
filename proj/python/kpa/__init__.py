"""Keypoint-argument match scoring: evaluation, features and experiment runs."""

import json
import os

from . import _kpa
from ._kpa import (
    ConfigError,
    DataError,
    TfidfModel,
    average_precision,
    cosine,
    dataset_stats,
    encode_tags,
    fit_tfidf,
    tag_ranks,
)

__all__ = [
    "ConfigError",
    "DataError",
    "TfidfModel",
    "ablate",
    "average_precision",
    "config_hash",
    "cosine",
    "dataset_stats",
    "encode_tags",
    "fit_tfidf",
    "load_config",
    "map_score",
    "run_experiment",
    "tag_ranks",
]


def _config_text(config):
    """Accepts a path to a JSON config or a dict. Returns (text, base_dir)."""
    if isinstance(config, (str, os.PathLike)):
        with open(config, encoding="utf-8") as f:
            return f.read(), os.path.dirname(os.path.abspath(config))
    return json.dumps(config), os.getcwd()


def load_config(config):
    """Canonical config dict, with defaults filled and paths resolved."""
    return json.loads(_kpa.config_canonical(*_config_text(config)))


def config_hash(config):
    return _kpa.config_hash(*_config_text(config))


def map_score(rows, method="default", best_match=True):
    """rows: dicts with arg_id, key_point_id, topic, stance (1/-1), label (1/0/None), score."""
    return json.loads(_kpa.map_score(list(rows), method, best_match))


def run_experiment(config, out_dir=None):
    text, base = _config_text(config)
    return json.loads(_kpa.run_experiment(text, base, None if out_dir is None else os.fspath(out_dir)))


def ablate(config, format="markdown"):
    text, base = _config_text(config)
    out = _kpa.ablate(text, base, format)
    return json.loads(out) if format == "json" else out
