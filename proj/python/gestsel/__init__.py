"""Python access to the gesture selection core."""

import json as _json

from ._core import Error, build_prompt, cosine, format_percent, score, semantic_key

__all__ = [
    "Error",
    "build_prompt",
    "cosine",
    "evaluate",
    "format_percent",
    "load_corpus",
    "parse",
    "run_experiment",
    "score",
    "semantic_key",
    "stats",
]


def load_corpus(path):
    from ._core import corpus_json

    return _json.loads(corpus_json(str(path)))


def stats(path):
    from ._core import stats_json

    return _json.loads(stats_json(str(path)))


def parse(raw):
    from ._core import parse_json

    return _json.loads(parse_json(raw))


def run_experiment(config_path):
    from ._core import run_experiment_json

    return _json.loads(run_experiment_json(str(config_path)))


def evaluate(output_dir):
    from ._core import evaluate_json

    return _json.loads(evaluate_json(str(output_dir)))
