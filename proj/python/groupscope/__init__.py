"""Group profiling analytics: corpus handling, multi-task attribute models,
language cue mining, group insights and contrastive tree explanations."""

import json

from ._core import (
    Dataset,
    Embeddings,
    Error,
    FormatError,
    IntegrityError,
    Model,
    NoContrastError,
    NotFoundError,
    NumericalError,
    Service,
    StateError,
    Tree,
    ValidationError,
    blob_corpus,
    explanation_corpus,
    planted_corpus,
)
from . import _core

__all__ = [
    "Dataset", "Embeddings", "Model", "Tree", "Service",
    "Error", "ValidationError", "FormatError", "IntegrityError", "NotFoundError",
    "StateError", "NoContrastError", "NumericalError",
    "planted_corpus", "explanation_corpus", "blob_corpus",
    "train", "evaluate", "mine_cues", "summarize", "density", "cluster", "fit_tree", "explain",
    "request", "response_schemas",
]


def train(dataset, attribute, embeddings, **config):
    """Trains a multi-task model; keyword arguments override TrainingConfig fields."""
    return Model.train(dataset, attribute, embeddings, json.dumps(config) if config else "")


def evaluate(model, dataset, embeddings):
    return json.loads(model.evaluate_json(dataset, embeddings))


def mine_cues(model, dataset, embeddings, top=10):
    """Ranked cues as a list of dicts. top=None keeps every cue."""
    text = _core.mine_cues_jsonl(model, dataset, embeddings, top)
    return [json.loads(line) for line in text.splitlines() if line]


def summarize(dataset, attributes=()):
    return json.loads(_core.summary_json(dataset, list(attributes)))


def density(dataset, attribute):
    return json.loads(_core.density_json(dataset, attribute))


def cluster(dataset, attributes=(), k_max=10):
    return json.loads(_core.cluster_json(dataset, list(attributes), k_max))


def fit_tree(dataset, attributes=(), max_depth=4, min_leaf=5):
    return Tree.fit(dataset, list(attributes), max_depth, min_leaf)


def explain(tree, dataset, fact, other=None, mode="p"):
    return json.loads(tree.explain_json(dataset, mode, fact, other))


def request(service, method, path, query=None, body=None, content_type="application/json"):
    """Sends one request through the in-process API. Returns (status, payload);
    JSON bodies are decoded, JSON Lines bodies become lists."""
    if body is not None and not isinstance(body, str):
        body = json.dumps(body)
    status, ctype, text = service.handle(method, path, dict(query or {}), body or "", content_type)
    if ctype.startswith("application/x-ndjson"):
        return status, [json.loads(line) for line in text.splitlines() if line]
    if ctype.startswith("application/json"):
        return status, json.loads(text)
    return status, text


def response_schemas():
    return json.loads(Service.response_schemas_json())
