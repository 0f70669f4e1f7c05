"""Python bindings for the corpus-forge C++ core.

Functions taking ``config`` accept a dict in the same layout as the CLI
config file; only the relevant section is read.
"""

import json as _json

from ._core import (  # noqa: F401
    BpeVocab,
    CorpusForgeError,
    Document,
    LangProfile,
    NgramModel,
    SentencePair,
    exact_dedup,
    fertility,
    identify_language,
    minhash_jaccard,
    near_dup_cluster,
    normalize_for_dedup,
    parse_instruction_response,
    perplexity,
    preset_names,
    render_answer_prompt,
    render_instruction_prompt,
    text_stats,
    train_langid,
    train_lm,
    word_segment,
)
from . import _core


def _cfg(config):
    return _json.dumps(config or {})


def apply_heuristics(doc, config=None):
    """(verdict dict, cleaned Document)"""
    return _core._apply_heuristics(doc, _cfg(config))


def edu_gate(doc, phase="P1", config=None):
    return _core._edu_gate(doc, str(phase), _cfg(config))


def bitext_gate(pair, config=None):
    return _core._bitext_gate(pair, _cfg(config))


def plan_phase(preset, phase_total_tokens, availability, overrides=None):
    return _json.loads(_core.plan_phase(preset, phase_total_tokens, availability, overrides or {}))


def lr_at(step, **schedule):
    """(lr, phase name) for one step; keyword args are schedule config keys."""
    return _core._lr_at(_cfg({"schedule": schedule}), step)


def phase_boundaries(**schedule):
    return _core._phase_boundaries(_cfg({"schedule": schedule}))


def filter_documents(docs, config=None):
    """Runs the web-document stages in memory; returns (survivors, report dict)."""
    out, report = _core._filter_documents(list(docs), _cfg(config))
    return out, _json.loads(report)
