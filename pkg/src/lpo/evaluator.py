"""Scores prompt templates by task accuracy over an evaluation slice.

Each example costs one chat call to the task backend (temperature 0.0 so
evaluation is as deterministic as the backend allows) plus, when the reply
is not trivially parseable, one chat call to the extraction backend. Raw
outputs that still resolve to no label count as incorrect: a prompt that
elicits unparseable output is a worse prompt, and excluding such cases
would inflate scores.

Replies are cached in an append-only JSONL file keyed by content hashes, so
a warm rerun issues zero gateway calls and returns identical scores.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import gateway, prompts
from .core import Dataset, Example, PromptTemplate, render_prompt, text_digest
from .errors import BackendError, BudgetExhaustedError, ValidationError
from .gateway import BackendConfig, Budget, ChatRequest

logger = logging.getLogger(__name__)

UNPARSED = "unparsed"


@dataclass(frozen=True)
class EvalConfig:
    """Task and extraction backends plus the evaluation slice size."""

    task_backend: BackendConfig
    extraction_backend: BackendConfig
    max_examples: int = 50
    temperature: float = 0.0
    cache_path: str | Path | None = None

    def __post_init__(self) -> None:
        if self.max_examples < 1:
            raise ValidationError("max_examples must be >= 1")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")


@dataclass(frozen=True)
class PerExample:
    """Outcome of one example: raw reply, extracted label, correctness."""

    index: int
    raw_output: str
    extracted_label: str
    correct: bool


@dataclass(frozen=True)
class ScoredPrompt:
    """A template with its measured accuracy and per-example audit trail."""

    template: PromptTemplate
    accuracy: float
    n_correct: int
    n_total: int
    per_example: tuple[PerExample, ...]
    eval_set_id: str

    def __post_init__(self) -> None:
        if self.n_total != len(self.per_example):
            raise ValidationError("per_example must cover the whole evaluation slice")
        if self.n_correct != sum(1 for p in self.per_example if p.correct):
            raise ValidationError("n_correct does not match per-example outcomes")
        if self.accuracy != self.n_correct / self.n_total:
            raise ValidationError("accuracy must equal n_correct / n_total exactly")


class ResponseCache:
    """Append-only JSONL cache of backend replies, keyed by content hash.

    I/O problems are downgraded to warnings; the evaluator then simply falls
    back to live calls. Appends are serialized.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            try:
                with open(self.path, encoding="utf-8") as fh:
                    for line in fh:
                        if not line.strip():
                            continue
                        obj = json.loads(line)
                        self._entries[obj["key_hash"]] = obj["raw_output"]
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                logger.warning("ignoring unreadable cache %s: %s", self.path, exc)
                self._entries = {}

    def get(self, key: str) -> str | None:
        return self._entries.get(key)

    def put(self, key: str, raw_output: str) -> None:
        with self._lock:
            self._entries[key] = raw_output
            if self.path is None:
                return
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"key_hash": key, "raw_output": raw_output}) + "\n")
            except OSError as exc:
                logger.warning("could not append to cache %s: %s", self.path, exc)


def _classify_key(cfg: EvalConfig, template: PromptTemplate, ex: Example) -> str:
    return text_digest(json.dumps([
        "classify", cfg.task_backend.model_name or cfg.task_backend.behavior,
        text_digest(template.text), text_digest(ex.text), repr(cfg.temperature),
    ]))


def _extract_key(cfg: EvalConfig, raw: str, label_set: Sequence[str]) -> str:
    return text_digest(json.dumps([
        "extract", cfg.extraction_backend.model_name or cfg.extraction_backend.behavior,
        text_digest(raw), list(label_set),
    ]))


def classify_one(template: PromptTemplate, ex: Example, cfg: EvalConfig,
                 budget: Budget, cache: ResponseCache | None = None) -> str:
    """Render the prompt for one example and return the task backend's reply."""
    cache = cache if cache is not None else ResponseCache(cfg.cache_path)
    key = _classify_key(cfg, template, ex)
    hit = cache.get(key)
    if hit is not None:
        return hit
    req = ChatRequest(user_text=render_prompt(template, ex.text),
                      temperature=cfg.temperature)
    raw = gateway.chat(cfg.task_backend, req, budget).text
    cache.put(key, raw)
    return raw


def _whole_word_match(lowered: str, label_set: Sequence[str]) -> str | None:
    found = [lab for lab in label_set
             if re.search(rf"(?<!\w){re.escape(lab)}(?!\w)", lowered)]
    if len(found) == 1:
        return found[0]
    return None


def _field_match(lowered: str, label_set: Sequence[str]) -> str | None:
    for match in re.finditer(r'"(?:sentiment|label)"\s*:\s*"([^"]*)"', lowered):
        value = match.group(1).strip()
        if value in label_set:
            return value
    return None


def extract_label(raw: str, label_set: Sequence[str], cfg: EvalConfig,
                  budget: Budget, cache: ResponseCache | None = None) -> str:
    """Resolve a raw task reply to a label, or ``"unparsed"``.

    Stage 1 is deterministic and free: a unique whole-word label occurrence,
    or a JSON-like ``sentiment``/``label`` field holding a label. Stage 2
    asks the extraction backend which label the reply asserts; most outputs
    never get that far, which saves budget without changing semantics on
    clear cases. Backend failures in stage 2 degrade to ``"unparsed"``.
    """
    if not label_set:
        raise ValidationError("extract_label needs a non-empty label set")
    lowered = raw.lower()
    hit = _whole_word_match(lowered, label_set) or _field_match(lowered, label_set)
    if hit is not None:
        return hit

    cache = cache if cache is not None else ResponseCache(cfg.cache_path)
    key = _extract_key(cfg, raw, label_set)
    reply = cache.get(key)
    if reply is None:
        req = ChatRequest(user_text=prompts.extract_instruction(raw, list(label_set)),
                          temperature=0.0)
        try:
            reply = gateway.chat(cfg.extraction_backend, req, budget).text
        except BackendError as exc:
            logger.warning("label extraction failed, counting as unparsed: %s", exc)
            return UNPARSED
        cache.put(key, reply)
    normalized = reply.strip().lower()
    if normalized in label_set:
        return normalized
    return _whole_word_match(normalized, label_set) or UNPARSED


def evaluate(template: PromptTemplate, eval_set: Dataset, cfg: EvalConfig,
             budget: Budget, cache: ResponseCache | None = None) -> ScoredPrompt:
    """Score one template over the first ``max_examples`` of the eval set.

    Accuracy is the exact integer ratio correct/total. Budget exhaustion
    mid-set raises an error naming how many examples completed.
    """
    if len(eval_set) == 0:
        raise ValidationError("evaluation set is empty")
    slice_examples = eval_set.examples[: min(len(eval_set), cfg.max_examples)]
    eval_set_id = Dataset(examples=slice_examples,
                          label_set=eval_set.label_set).fingerprint()
    cache = cache if cache is not None else ResponseCache(cfg.cache_path)
    outcomes: list[PerExample] = []
    for index, ex in enumerate(slice_examples):
        try:
            raw = classify_one(template, ex, cfg, budget, cache)
            label = extract_label(raw, eval_set.label_set, cfg, budget, cache)
        except BudgetExhaustedError as exc:
            raise BudgetExhaustedError(
                f"budget exhausted after {len(outcomes)} of {len(slice_examples)} "
                f"examples for template {template.id}: {exc}"
            ) from exc
        outcomes.append(PerExample(
            index=index, raw_output=raw, extracted_label=label,
            correct=(label == ex.label),
        ))
    n_correct = sum(1 for o in outcomes if o.correct)
    return ScoredPrompt(
        template=template,
        accuracy=n_correct / len(outcomes),
        n_correct=n_correct,
        n_total=len(outcomes),
        per_example=tuple(outcomes),
        eval_set_id=eval_set_id,
    )
