"""Temporal text-attributed graph matching toolkit.

Thin wrappers over the C++ core: point-in-time graph store, subgraph
sampler, dual text encoder, graph embedding model and pipeline stages.
JSON-config stages accept plain dicts.
"""

import json as _json

from ._core import (  # noqa: F401
    DualEncoder,
    GraphModel,
    TemporalGraph,
    TtagError,
    load_store,
    ndcg_at_k,
    sample_subgraph,
)
from . import _core as _c


def generate(config: dict, out_dir: str) -> dict:
    _c.generate(_json.dumps(config), str(out_dir))
    return describe(out_dir)


def describe(dataset_dir: str) -> dict:
    return _json.loads(_c.describe(str(dataset_dir)))


def train_text(dataset_dir: str, model_out: str, config: dict | None = None) -> dict:
    return _json.loads(
        _c.stage_train_text(str(dataset_dir), _json.dumps(config or {}), str(model_out))
    )


def embed_all(dataset_dir: str, text_model: str, out_dir: str) -> dict:
    return _json.loads(_c.stage_embed_all(str(dataset_dir), str(text_model), str(out_dir)))


def mine(dataset_dir: str, out_file: str, params: dict | None = None,
         random_per_label: int = 10) -> dict:
    return _json.loads(
        _c.stage_mine(str(dataset_dir), _json.dumps(params or {}), random_per_label,
                      str(out_file))
    )


def train_graph(dataset_dir: str, quints_file: str, model_out: str,
                config: dict | None = None) -> dict:
    return _json.loads(
        _c.stage_train_graph(str(dataset_dir), _json.dumps(config or {}), str(quints_file),
                             str(model_out))
    )


def evaluate(dataset_dir: str, checkpoint: str = "") -> dict:
    return _json.loads(_c.stage_eval(str(dataset_dir), str(checkpoint)))
