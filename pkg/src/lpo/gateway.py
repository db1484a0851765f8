"""Single choke point for all black-box LLM access.

Chat-style generation and text embedding both go through here, with retry,
budget enforcement, usage accounting, a per-backend in-flight cap, and a
family of fully deterministic mock backends for tests and toy runs. No other
module in this package performs network access.

Remote wire protocol is JSON-over-HTTP in the de facto chat-completions /
embeddings shape. Secrets are read from the environment variable named in
the config (default ``LPO_API_KEY``); ``LPO_ENDPOINT`` overrides the
configured endpoint. The mock chat backend additionally accepts an optional
soft-prompt vector alongside the user text; remote backends reject it.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import requests

from . import prompts
from .core import PLACEHOLDER, as_vector, load_dataset
from .errors import BackendError, BudgetExhaustedError, ValidationError
from .toyspace import ToySpaceSpec, strip_placeholder, toy_decode, toy_encode

logger = logging.getLogger(__name__)

API_KEY_ENV = "LPO_API_KEY"
ENDPOINT_ENV = "LPO_ENDPOINT"

BACKEND_KINDS = ("remote_chat", "remote_embed", "mock")


class _TransientFailure(BackendError):
    """Retryable failure: timeout, connection error, HTTP 5xx or 429."""


@dataclass(frozen=True)
class ChatRequest:
    """One chat-style generation request."""

    user_text: str
    system_text: str | None = None
    temperature: float = 0.0
    max_tokens: int = 512
    soft_prompt: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValidationError("chat request has empty user_text")
        if not np.isfinite(self.temperature) or self.temperature < 0:
            raise ValidationError(f"temperature must be finite and >= 0, got {self.temperature}")
        if self.max_tokens <= 0:
            raise ValidationError("max_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValidationError("token counts must be >= 0")


@dataclass
class Budget:
    """Run-wide call and token ceilings with exact usage accounting."""

    max_calls: int
    max_total_tokens: int
    calls: int = field(default=0, init=False)
    total_tokens: int = field(default=0, init=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.max_calls <= 0 or self.max_total_tokens <= 0:
            raise ValidationError("budget limits must be positive")

    def ensure_available(self) -> None:
        with self._lock:
            if self.calls >= self.max_calls:
                raise BudgetExhaustedError(
                    f"call budget exhausted ({self.calls}/{self.max_calls} calls)"
                )
            if self.total_tokens >= self.max_total_tokens:
                raise BudgetExhaustedError(
                    f"token budget exhausted ({self.total_tokens}/{self.max_total_tokens} tokens)"
                )

    def record(self, prompt_tokens: int, completion_tokens: int) -> None:
        with self._lock:
            self.calls += 1
            self.total_tokens += prompt_tokens + completion_tokens


def usage_report(budget: Budget) -> tuple[int, int]:
    """Running (calls, tokens) totals; exact sums of per-call reported usage."""
    with budget._lock:
        return budget.calls, budget.total_tokens


@dataclass
class BackendConfig:
    """Where and how to reach one backend.

    ``kind`` is one of remote_chat, remote_embed, mock. Mock backends pick a
    registered deterministic behavior by name and parameterize it via
    ``params``; see MOCK_CHAT_BEHAVIORS / MOCK_EMBED_BEHAVIORS.
    """

    kind: str
    endpoint: str = ""
    model_name: str = ""
    api_key_env: str = API_KEY_ENV
    timeout: float = 30.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    max_in_flight: int = 4
    behavior: str = "fixed"
    params: dict = field(default_factory=dict)
    _state: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValidationError(f"unknown backend kind {self.kind!r}")
        if self.kind.startswith("remote") and not (self.endpoint and self.model_name):
            raise ValidationError(f"{self.kind} backend requires endpoint and model_name")
        if self.max_attempts < 1:
            raise ValidationError("max_attempts must be >= 1")
        self._state.setdefault("calls", 0)
        self._state.setdefault("attempts", 0)
        self._state.setdefault("cursor", 0)
        self._state.setdefault("lock", threading.Lock())
        self._state.setdefault("semaphore", threading.BoundedSemaphore(self.max_in_flight))


def call_count(cfg: BackendConfig) -> int:
    """Completed gateway calls against this backend (accounting hook)."""
    return cfg._state["calls"]


def attempt_count(cfg: BackendConfig) -> int:
    """Total attempts including retried failures."""
    return cfg._state["attempts"]


def _call_with_retries(cfg: BackendConfig, label: str, fn: Callable):
    last: Exception | None = None
    for attempt in range(1, cfg.max_attempts + 1):
        with cfg._state["lock"]:
            cfg._state["attempts"] += 1
        try:
            with cfg._state["semaphore"]:
                return fn()
        except _TransientFailure as exc:
            last = exc
            logger.warning("%s attempt %d/%d failed: %s", label, attempt, cfg.max_attempts, exc)
            if attempt < cfg.max_attempts and cfg.backoff_base > 0:
                time.sleep(cfg.backoff_base * (2 ** (attempt - 1)))
    raise BackendError(
        f"{label} unreachable after {cfg.max_attempts} attempt(s): {last}"
    )


def chat(cfg: BackendConfig, req: ChatRequest, budget: Budget) -> ChatResponse:
    """Issue one chat call, retrying transient failures, charging the budget."""
    budget.ensure_available()
    if cfg.kind == "mock":
        resp = _call_with_retries(cfg, f"mock chat [{cfg.behavior}]", lambda: _mock_chat(cfg, req))
    elif cfg.kind == "remote_chat":
        if req.soft_prompt is not None:
            raise BackendError("soft-prompt injection is not supported by remote backends")
        resp = _call_with_retries(cfg, f"chat {cfg.model_name}", lambda: _remote_chat(cfg, req))
    else:
        raise ValidationError(f"backend kind {cfg.kind!r} does not serve chat")
    budget.record(resp.prompt_tokens, resp.completion_tokens)
    with cfg._state["lock"]:
        cfg._state["calls"] += 1
    return resp


def embed(cfg: BackendConfig, texts: Sequence[str], budget: Budget) -> list[np.ndarray]:
    """Embed a batch of texts; one vector per text, order preserved.

    The whole batch counts as a single budgeted call. A dimension mismatch
    within the batch is a hard error.
    """
    if not texts:
        raise ValidationError("embed called with an empty text list")
    budget.ensure_available()
    if cfg.kind == "mock":
        vectors, usage = _call_with_retries(
            cfg, f"mock embed [{cfg.behavior}]", lambda: _mock_embed(cfg, texts))
    elif cfg.kind == "remote_embed":
        vectors, usage = _call_with_retries(
            cfg, f"embed {cfg.model_name}", lambda: _remote_embed(cfg, texts))
    else:
        raise ValidationError(f"backend kind {cfg.kind!r} does not serve embeddings")
    if len(vectors) != len(texts):
        raise BackendError(f"backend returned {len(vectors)} vectors for {len(texts)} texts")
    dims = {v.size for v in vectors}
    if len(dims) > 1:
        raise BackendError(f"embedding dimension mismatch within batch: {sorted(dims)}")
    budget.record(usage[0], usage[1])
    with cfg._state["lock"]:
        cfg._state["calls"] += 1
    return vectors


# --- remote wire ----------------------------------------------------------


def _resolve_endpoint(cfg: BackendConfig) -> str:
    endpoint = os.environ.get(ENDPOINT_ENV, "").strip() or cfg.endpoint
    if not endpoint:
        raise ValidationError("remote backend has no endpoint configured")
    return endpoint


def _auth_headers(cfg: BackendConfig) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(cfg.api_key_env, "").strip()
    if key:
        headers["Authorization"] = f"Bearer {key}"
    return headers


def _post_json(cfg: BackendConfig, payload: dict) -> dict:
    url = _resolve_endpoint(cfg)
    try:
        response = requests.post(url, json=payload, headers=_auth_headers(cfg),
                                 timeout=cfg.timeout)
    except (requests.Timeout, requests.ConnectionError) as exc:
        raise _TransientFailure(f"connection failure: {exc}") from exc
    if response.status_code == 429 or response.status_code >= 500:
        raise _TransientFailure(f"HTTP {response.status_code}")
    if response.status_code >= 400:
        raise BackendError(f"HTTP {response.status_code}: {response.text[:200]}")
    try:
        return response.json()
    except ValueError as exc:
        raise BackendError(f"backend reply is not JSON: {exc}") from exc


def _remote_chat(cfg: BackendConfig, req: ChatRequest) -> ChatResponse:
    messages = []
    if req.system_text:
        messages.append({"role": "system", "content": req.system_text})
    messages.append({"role": "user", "content": req.user_text})
    payload = {
        "model": cfg.model_name,
        "messages": messages,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }
    body = _post_json(cfg, payload)
    try:
        text = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"malformed chat reply: missing choices/message ({exc!r})") from exc
    usage = body.get("usage") or {}
    return ChatResponse(
        text=str(text),
        prompt_tokens=int(usage.get("prompt_tokens", 0)),
        completion_tokens=int(usage.get("completion_tokens", 0)),
    )


def _remote_embed(cfg: BackendConfig, texts: Sequence[str]) -> tuple[list[np.ndarray], tuple[int, int]]:
    payload = {"model": cfg.model_name, "input": list(texts)}
    body = _post_json(cfg, payload)
    try:
        vectors = [as_vector(item["embedding"], name="embedding") for item in body["data"]]
    except (KeyError, TypeError) as exc:
        raise BackendError(f"malformed embeddings reply: {exc!r}") from exc
    usage = body.get("usage") or {}
    return vectors, (int(usage.get("prompt_tokens", 0)), 0)


# --- mock backends --------------------------------------------------------


def _word_count(text: str) -> int:
    return len(text.split())


def _mock_usage(cfg: BackendConfig, req_text: str, reply: str) -> tuple[int, int]:
    fixed = cfg.params.get("usage")
    if fixed is not None:
        return int(fixed[0]), int(fixed[1])
    return _word_count(req_text), _word_count(reply)


def _mock_chat(cfg: BackendConfig, req: ChatRequest) -> ChatResponse:
    try:
        behavior = MOCK_CHAT_BEHAVIORS[cfg.behavior]
    except KeyError:
        raise ValidationError(f"unknown mock chat behavior {cfg.behavior!r}") from None
    reply = behavior(cfg, req)
    usage = _mock_usage(cfg, req.user_text, reply)
    return ChatResponse(text=reply, prompt_tokens=usage[0], completion_tokens=usage[1])


def _mock_embed(cfg: BackendConfig, texts: Sequence[str]) -> tuple[list[np.ndarray], tuple[int, int]]:
    try:
        behavior = MOCK_EMBED_BEHAVIORS[cfg.behavior]
    except KeyError:
        raise ValidationError(f"unknown mock embed behavior {cfg.behavior!r}") from None
    vectors = [as_vector(v, name="mock embedding") for v in behavior(cfg, texts)]
    usage = cfg.params.get("usage")
    if usage is not None:
        return vectors, (int(usage[0]), int(usage[1]))
    return vectors, (sum(_word_count(t) for t in texts), 0)


def _behavior_fixed(cfg: BackendConfig, req: ChatRequest) -> str:
    return str(cfg.params.get("reply", ""))


def _behavior_echo(cfg: BackendConfig, req: ChatRequest) -> str:
    return req.user_text


def _behavior_handler(cfg: BackendConfig, req: ChatRequest) -> str:
    fn = cfg.params.get("fn")
    if fn is None:
        raise ValidationError("handler mock needs params['fn']")
    return str(fn(req))


def _behavior_sequence(cfg: BackendConfig, req: ChatRequest) -> str:
    replies = cfg.params.get("replies", [])
    with cfg._state["lock"]:
        cursor = cfg._state["cursor"]
        cfg._state["cursor"] = cursor + 1
    if cursor >= len(replies):
        raise BackendError(f"mock script exhausted after {len(replies)} replies")
    entry = replies[cursor]
    if isinstance(entry, dict) and "error" in entry:
        status = int(entry["error"])
        if status == 429 or status >= 500:
            raise _TransientFailure(f"HTTP {status} (scripted)")
        raise BackendError(f"HTTP {status} (scripted)")
    return str(entry)


def _behavior_toy_refine(cfg: BackendConfig, req: ChatRequest) -> str:
    """Deterministic format refinement: append the placeholder if missing."""
    raw = prompts.extract_block(req.user_text, prompts.BLOCK_RAW_OPEN, prompts.BLOCK_RAW_CLOSE)
    if raw is None:
        raw = req.user_text
    raw = raw.strip()
    if not raw:
        return ""
    if PLACEHOLDER in raw:
        return raw
    return raw + " " + PLACEHOLDER


def _toy_spec(cfg: BackendConfig) -> ToySpaceSpec:
    names = cfg.params.get("parameters")
    if not names:
        raise ValidationError(f"mock behavior {cfg.behavior!r} needs params['parameters']")
    return ToySpaceSpec(tuple(names))


def _behavior_toy_blend(cfg: BackendConfig, req: ChatRequest) -> str:
    """Numeric stand-in for a paraphrasing decoder in the toy space.

    Extracts both parent prompts and the blend weight from the instruction,
    blends the parsed toy vectors, and returns the canonical toy string
    (without a placeholder, as a raw decode would).
    """
    spec = _toy_spec(cfg)
    parent_a = prompts.extract_block(req.user_text, prompts.BLOCK_A_OPEN, prompts.BLOCK_A_CLOSE)
    parent_b = prompts.extract_block(req.user_text, prompts.BLOCK_B_OPEN, prompts.BLOCK_B_CLOSE)
    if parent_a is None:
        raise BackendError("toy blend mock found no parent prompt in the instruction")
    vec_a = toy_encode(spec, strip_placeholder(parent_a))
    if parent_b is None:
        return toy_decode(spec, vec_a)
    match = re.search(r"blend_weight=([-+0-9.eE]+)", req.user_text)
    if match is None:
        raise BackendError("toy blend mock found no blend weight in the instruction")
    weight = float(match.group(1))
    vec_b = toy_encode(spec, strip_placeholder(parent_b))
    return toy_decode(spec, weight * vec_a + (1.0 - weight) * vec_b)


def _behavior_toy_chat(cfg: BackendConfig, req: ChatRequest) -> str:
    """One toy backend for a whole pipeline: refine, blend, and soft decode."""
    if req.soft_prompt is not None:
        return _behavior_toy_soft(cfg, req)
    if prompts.extract_block(req.user_text, prompts.BLOCK_RAW_OPEN,
                             prompts.BLOCK_RAW_CLOSE) is not None:
        return _behavior_toy_refine(cfg, req)
    if prompts.extract_block(req.user_text, prompts.BLOCK_A_OPEN,
                             prompts.BLOCK_A_CLOSE) is not None:
        return _behavior_toy_blend(cfg, req)
    raise BackendError("toy chat mock cannot classify the instruction")


def _behavior_toy_soft(cfg: BackendConfig, req: ChatRequest) -> str:
    """Decode the soft-prompt vector itself; exercises the wire extension."""
    if req.soft_prompt is None:
        raise BackendError("toy soft mock requires a soft-prompt vector")
    return toy_decode(_toy_spec(cfg), np.asarray(req.soft_prompt, dtype=float))


def _toy_task_examples(cfg: BackendConfig) -> list[tuple[str, str, int]]:
    """Examples as (text, label, rank); rank is a content-hash permutation.

    Ranking by hash rather than file position keeps evaluation of any subset
    of the examples statistically fair, while a full pass still measures
    exactly round(fitness * N) correct answers.
    """
    with cfg._state["lock"]:
        cached = cfg._state.get("examples")
        if cached is None:
            inline = cfg.params.get("examples")
            if inline is not None:
                pairs = [(str(e["text"]), str(e["label"]).strip().lower()) for e in inline]
            else:
                path = cfg.params.get("dataset")
                if path is None:
                    raise ValidationError("toy task mock needs params['examples'] or params['dataset']")
                ds = load_dataset(path)
                pairs = [(ex.text, ex.label) for ex in ds.examples]
            order = sorted(range(len(pairs)),
                           key=lambda i: hashlib.sha256(pairs[i][0].encode("utf-8")).hexdigest())
            rank = {i: r for r, i in enumerate(order)}
            cached = [(text, label, rank[i]) for i, (text, label) in enumerate(pairs)]
            cfg._state["examples"] = cached
    return cached


def _behavior_toy_task(cfg: BackendConfig, req: ChatRequest) -> str:
    """Scripted task model whose accuracy equals a quantized fitness score.

    The fitness of a rendered prompt is ``1 - ||e - target||^2 / 2`` where
    ``e`` is the toy vector parsed out of the prompt. Over the configured
    example list of size N the mock answers the gold label for the
    ``round(fitness * N)`` examples ranked lowest in a fixed content-hash
    permutation and a wrong label for the rest, so evaluating the full list
    measures exactly the quantized fitness.
    """
    spec = _toy_spec(cfg)
    target = np.asarray(cfg.params["target"], dtype=float)
    examples = _toy_task_examples(cfg)
    coords = []
    for name in spec.parameter_names:
        match = re.search(rf"{re.escape(name)}=([-+0-9.eE]+)", req.user_text)
        if match is None:
            raise BackendError(f"toy task mock: no {name!r} value in the rendered prompt")
        coords.append(float(match.group(1)))
    vec = np.asarray(coords, dtype=float)
    fitness = 1.0 - float(np.sum((vec - target) ** 2)) / 2.0
    fitness = min(1.0, max(0.0, fitness))
    n_correct = int(round(fitness * len(examples)))
    matched = None
    for text, label, rank in examples:
        if text in req.user_text:
            matched = (label, rank)
            break
    if matched is None:
        raise BackendError("toy task mock: rendered prompt matches no known example")
    gold, rank = matched
    if rank < n_correct:
        return gold
    labels = sorted({label for _, label, _ in examples})
    return labels[(labels.index(gold) + 1) % len(labels)]


def _behavior_hash_embed(cfg: BackendConfig, texts: Sequence[str]) -> list[np.ndarray]:
    """Deterministic pseudo-random embedding: same text, same vector."""
    dim = int(cfg.params.get("dimension", 8))
    out = []
    for text in texts:
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
        out.append(np.random.default_rng(seed).standard_normal(dim))
    return out


def _behavior_toy_embed(cfg: BackendConfig, texts: Sequence[str]) -> list[np.ndarray]:
    """Exact toy-space encoder; ignores the input placeholder if present."""
    spec = _toy_spec(cfg)
    return [toy_encode(spec, strip_placeholder(t)) for t in texts]


def _behavior_map_embed(cfg: BackendConfig, texts: Sequence[str]) -> list[np.ndarray]:
    table = cfg.params.get("vectors", {})
    out = []
    for text in texts:
        if text not in table:
            raise BackendError(f"map embed mock has no vector for {text!r}")
        out.append(np.asarray(table[text], dtype=float))
    return out


MOCK_CHAT_BEHAVIORS: dict[str, Callable[[BackendConfig, ChatRequest], str]] = {
    "fixed": _behavior_fixed,
    "echo": _behavior_echo,
    "handler": _behavior_handler,
    "sequence": _behavior_sequence,
    "toy_refine": _behavior_toy_refine,
    "toy_blend": _behavior_toy_blend,
    "toy_soft": _behavior_toy_soft,
    "toy_chat": _behavior_toy_chat,
    "toy_task": _behavior_toy_task,
}

MOCK_EMBED_BEHAVIORS: dict[str, Callable[[BackendConfig, Sequence[str]], list[np.ndarray]]] = {
    "hash": _behavior_hash_embed,
    "toy": _behavior_toy_embed,
    "map": _behavior_map_embed,
}
