"""Python bindings for the stepwise reasoning-trace toolkit.

Traces are plain dicts in the JSON record shape used by the JSONL files:
``{"question", "states": [{"index", "action_kind", ..., "content"}], "final_answer"}``.
"""

import json as _json

from . import _core
from ._core import (
    AllExtractionsFailed,
    EmptyBatch,
    EmptyBlock,
    MalformedPrefix,
    NoFinalAnswer,
    NonFiniteInput,
    SchemaError,
    StepwiseError,
    TraceSyntaxError,
    Unparseable,
    dpo_grad,
    dpo_loss,
    extract_final_answer,
    maj_at_n,
    normalize_answer,
    ntp_loss,
    render_report,
    run_loss_checks,
    score,
)

__all__ = [
    "AllExtractionsFailed",
    "EmptyBatch",
    "EmptyBlock",
    "MalformedPrefix",
    "NoFinalAnswer",
    "NonFiniteInput",
    "SchemaError",
    "StepwiseError",
    "TraceSyntaxError",
    "Unparseable",
    "dpo_grad",
    "dpo_loss",
    "extract_final_answer",
    "is_valid",
    "legal_next_actions",
    "maj_at_n",
    "normalize_answer",
    "ntp_loss",
    "parse_tagged",
    "render_report",
    "run_loss_checks",
    "score",
    "serialize_tagged",
    "validate",
]


def _dump(trace):
    return trace if isinstance(trace, str) else _json.dumps(trace)


def parse_tagged(raw, question):
    """Parse tagged trace text into a record dict."""
    return _json.loads(_core.parse_tagged(raw, question))


def serialize_tagged(trace):
    return _core.serialize_tagged(_dump(trace))


def validate(trace, stage=2, max_subquestions=10, max_states=64):
    """List of (state_index, code, message) violations; empty when valid."""
    return _core.validate(_dump(trace), stage, max_subquestions, max_states)


def is_valid(trace, stage=2, **limits):
    return not validate(trace, stage, **limits)


def legal_next_actions(prefix, stage=2, max_subquestions=10, max_states=64):
    return set(_core.legal_next_actions(_dump(prefix), stage, max_subquestions, max_states))
