"""Factor-graph join cardinality estimation."""

import json

from ._core import (
    MODEL_FORMAT_VERSION,
    DataError,
    Database,
    Error,
    EstimationError,
    Model,
    ParseError,
    SchemaError,
    train,
)


def estimate(model, query, explain=False):
    """Estimate one query (SQL text or JSON form); returns the report as a dict."""
    return json.loads(model.estimate_json(query, explain))


def subplans(model, query, cap=None):
    """Progressive estimates of every connected sub-plan."""
    return json.loads(model.subplans_json(query, cap))


__all__ = [
    "MODEL_FORMAT_VERSION",
    "DataError",
    "Database",
    "Error",
    "EstimationError",
    "Model",
    "ParseError",
    "SchemaError",
    "estimate",
    "subplans",
    "train",
]
