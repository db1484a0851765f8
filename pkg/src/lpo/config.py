"""Application config: one YAML file wiring datasets, backends, and modules.

Relative paths inside the file resolve against the config file's directory.
Loading collects every validation problem instead of stopping at the first,
so a bad config is reported exhaustively before any backend call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .core import PromptTemplate, SplitSpec, validate_template
from .decoder import DecodeStrategy
from .encoder import EncoderSpec
from .errors import ValidationError
from .evaluator import EvalConfig
from .explorer import ExplorationPolicy
from .gateway import BackendConfig, Budget
from .optimizer import OptimizerConfig
from .projector import load_weights
from .toyspace import ToySpaceSpec

DEFAULT_CONFIG_TEXT = """\
# lpo run configuration. Relative paths resolve against this file's directory.

# Artifacts (run records, summaries, caches) are written here.
out_dir: out

dataset:
  train: train.jsonl          # JSONL records {"text": ..., "label": ...} or CSV with a text,label header
  test: null                  # optional held-out file for `lpo evaluate --split test`
  labels: null                # optional declared label superset, e.g. [negative, neutral, positive]
  validation_fraction: 0.1    # share of the training file split off for scoring prompts
  rng_seed: 7                 # seed of the deterministic shuffle behind the split

encoder:
  dimension: 8                # latent dimension d the backend must return
  normalize: false            # rescale embeddings to unit norm (raw vectors by default)
  backend:
    kind: mock                # mock | remote_embed
    behavior: hash            # mock only: hash | toy | map
    params: {dimension: 8}
    # kind: remote_embed      # remote backends need endpoint + model_name;
    # endpoint: https://api.example.com/v1/embeddings
    # model_name: my-embedding-model
    # api_key_env: LPO_API_KEY

decode:
  kind: anchor_blend          # anchor_blend | soft_prompt | toy_inverse
  decode_temperature: 0.7     # sampling temperature for candidate decoding
  refinement_temperature: 0.0 # temperature for the conservative format-refinement pass
  toy_parameters: null        # toy_inverse only: ordered parameter names
  projector_path: null        # soft_prompt only: weight file from `lpo fit-projector`
  chat_backend:
    kind: mock                # mock | remote_chat
    behavior: echo
    params: {}

policy:
  strategy_mix: {interpolate: 1.0}   # weights over interpolate / extrapolate / perturb
  blend_range: [0.35, 0.65]          # interpolation weight band around 0.5
  extrapolation_range: [[-0.5, 0.0], [1.0, 1.5]]
  sigma: null                        # perturbation scale; null = 0.1 x mean seed norm
  rng_seed: 42
  candidate_count: 15                # candidates generated per cycle

optimizer:
  select_n: 3                 # templates fed forward from each cycle
  max_iterations: 1
  patience: 1                 # non-improving iterations tolerated before stopping
  keep_seeds: true            # seeds compete with candidates in selection

evaluator:
  max_examples: 50            # evaluation slice size (cost control)
  temperature: 0.0
  task_backend:
    kind: mock
    behavior: fixed
    params: {reply: positive}
  extraction_backend:
    kind: mock
    behavior: fixed
    params: {reply: unparsed}

budget:
  max_calls: 100000
  max_total_tokens: 10000000
"""


@dataclass
class AppConfig:
    """Validated, fully resolved run configuration."""

    path: Path
    out_dir: Path
    train_path: Path
    test_path: Path | None
    labels: list[str] | None
    split: SplitSpec
    optimizer: OptimizerConfig
    task_backend: BackendConfig
    extraction_backend: BackendConfig
    max_examples: int
    eval_temperature: float
    max_calls: int
    max_total_tokens: int

    def eval_config(self, split: str) -> EvalConfig:
        # per-split cache files keep validation and test replies independent
        return EvalConfig(
            task_backend=self.task_backend,
            extraction_backend=self.extraction_backend,
            max_examples=self.max_examples,
            temperature=self.eval_temperature,
            cache_path=self.out_dir / f"cache_{split}.jsonl",
        )

    def budget(self) -> Budget:
        return Budget(max_calls=self.max_calls, max_total_tokens=self.max_total_tokens)


def _resolve(base: Path, value: str | None) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else (base / p)


def _build_backend(raw: dict, base: Path, errors: list[str], where: str) -> BackendConfig | None:
    if not isinstance(raw, dict):
        errors.append(f"{where}: backend must be a mapping")
        return None
    params = dict(raw.get("params") or {})
    if "dataset" in params:
        resolved = _resolve(base, str(params["dataset"]))
        if resolved is None or not resolved.exists():
            errors.append(f"{where}: backend dataset file not found: {params['dataset']}")
            return None
        params["dataset"] = str(resolved)
    try:
        return BackendConfig(
            kind=raw.get("kind", "mock"),
            endpoint=raw.get("endpoint", "") or "",
            model_name=raw.get("model_name", "") or "",
            api_key_env=raw.get("api_key_env", "LPO_API_KEY"),
            timeout=float(raw.get("timeout", 30.0)),
            max_attempts=int(raw.get("max_attempts", 3)),
            backoff_base=float(raw.get("backoff_base", 0.5)),
            max_in_flight=int(raw.get("max_in_flight", 4)),
            behavior=raw.get("behavior", "fixed"),
            params=params,
        )
    except (ValidationError, TypeError, ValueError) as exc:
        errors.append(f"{where}: {exc}")
        return None


def load_app_config(path: str | Path) -> tuple[AppConfig | None, list[str]]:
    """Parse and validate; returns (config, errors). Config is None on errors."""
    path = Path(path)
    errors: list[str] = []
    if not path.exists():
        return None, [f"config file not found: {path}"]
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        return None, [f"config is not valid YAML: {exc}"]
    if not isinstance(raw, dict):
        return None, ["config root must be a mapping"]
    base = path.parent

    def section(name: str) -> dict:
        value = raw.get(name)
        if value is None:
            return {}
        if not isinstance(value, dict):
            errors.append(f"{name}: must be a mapping")
            return {}
        return value

    ds = section("dataset")
    train_path = _resolve(base, ds.get("train"))
    if train_path is None:
        errors.append("dataset.train: required")
    elif not train_path.exists():
        errors.append(f"dataset.train: file not found: {train_path}")
    test_path = _resolve(base, ds.get("test"))
    if test_path is not None and not test_path.exists():
        errors.append(f"dataset.test: file not found: {test_path}")
    labels = ds.get("labels")
    split = None
    try:
        split = SplitSpec(
            validation_fraction=float(ds.get("validation_fraction", 0.1)),
            rng_seed=int(ds.get("rng_seed", 7)),
        )
    except (ValidationError, TypeError, ValueError) as exc:
        errors.append(f"dataset: {exc}")

    enc = section("encoder")
    encoder_spec = None
    enc_backend = _build_backend(enc.get("backend") or {}, base, errors, "encoder.backend")
    if enc_backend is not None:
        try:
            encoder_spec = EncoderSpec(
                backend=enc_backend,
                dimension=int(enc.get("dimension", 8)),
                normalize=bool(enc.get("normalize", False)),
            )
        except (ValidationError, TypeError, ValueError) as exc:
            errors.append(f"encoder: {exc}")

    dec = section("decode")
    decode_strategy = None
    chat_backend = None
    if dec.get("chat_backend") is not None:
        chat_backend = _build_backend(dec["chat_backend"], base, errors, "decode.chat_backend")
    toy_space = None
    if dec.get("toy_parameters"):
        try:
            toy_space = ToySpaceSpec(tuple(dec["toy_parameters"]))
        except ValidationError as exc:
            errors.append(f"decode.toy_parameters: {exc}")
    proj = None
    proj_path = _resolve(base, dec.get("projector_path"))
    if proj_path is not None:
        try:
            proj = load_weights(proj_path)
        except ValidationError as exc:
            errors.append(f"decode.projector_path: {exc}")
    try:
        decode_strategy = DecodeStrategy(
            kind=dec.get("kind", "anchor_blend"),
            chat=chat_backend,
            toy_space=toy_space,
            projector=proj,
            decode_temperature=float(dec.get("decode_temperature", 0.7)),
            refinement_temperature=float(dec.get("refinement_temperature", 0.0)),
        )
    except (ValidationError, TypeError, ValueError) as exc:
        errors.append(f"decode: {exc}")

    pol = section("policy")
    policy = None
    try:
        mix = pol.get("strategy_mix", {"interpolate": 1.0})
        blend = pol.get("blend_range", [0.35, 0.65])
        extrap = pol.get("extrapolation_range", [[-0.5, 0.0], [1.0, 1.5]])
        policy = ExplorationPolicy(
            strategy_mix={str(k): float(v) for k, v in mix.items()},
            blend_range=(float(blend[0]), float(blend[1])),
            extrapolation_range=tuple(
                (float(lo), float(hi)) for lo, hi in extrap
            ),
            sigma=None if pol.get("sigma") is None else float(pol["sigma"]),
            rng_seed=int(pol.get("rng_seed", 42)),
            candidate_count=int(pol.get("candidate_count", 15)),
        )
    except (ValidationError, TypeError, ValueError, IndexError) as exc:
        errors.append(f"policy: {exc}")

    opt = section("optimizer")
    optimizer_cfg = None
    if policy is not None and encoder_spec is not None and decode_strategy is not None:
        try:
            optimizer_cfg = OptimizerConfig(
                policy=policy,
                encoder=encoder_spec,
                decode=decode_strategy,
                select_n=int(opt.get("select_n", 3)),
                max_iterations=int(opt.get("max_iterations", 1)),
                patience=int(opt.get("patience", 1)),
                keep_seeds=bool(opt.get("keep_seeds", True)),
            )
        except (ValidationError, TypeError, ValueError) as exc:
            errors.append(f"optimizer: {exc}")

    ev = section("evaluator")
    task_backend = _build_backend(ev.get("task_backend") or {}, base, errors,
                                  "evaluator.task_backend")
    extraction_backend = _build_backend(ev.get("extraction_backend") or {}, base, errors,
                                        "evaluator.extraction_backend")
    max_examples = ev.get("max_examples", 50)
    eval_temperature = ev.get("temperature", 0.0)
    try:
        if int(max_examples) < 1:
            errors.append("evaluator.max_examples: must be >= 1")
        if float(eval_temperature) < 0:
            errors.append("evaluator.temperature: must be >= 0")
    except (TypeError, ValueError) as exc:
        errors.append(f"evaluator: {exc}")

    bud = section("budget")
    max_calls = int(bud.get("max_calls", 100000))
    max_total_tokens = int(bud.get("max_total_tokens", 10000000))
    if max_calls < 1 or max_total_tokens < 1:
        errors.append("budget: limits must be positive")

    out_dir = _resolve(base, raw.get("out_dir", "out"))

    if errors or optimizer_cfg is None or split is None or train_path is None \
            or task_backend is None or extraction_backend is None:
        if not errors:
            errors.append("config incomplete")
        return None, errors
    return AppConfig(
        path=path,
        out_dir=out_dir,
        train_path=train_path,
        test_path=test_path,
        labels=list(labels) if labels else None,
        split=split,
        optimizer=optimizer_cfg,
        task_backend=task_backend,
        extraction_backend=extraction_backend,
        max_examples=int(max_examples),
        eval_temperature=float(eval_temperature),
        max_calls=max_calls,
        max_total_tokens=max_total_tokens,
    ), []


def load_seed_templates(path: str | Path) -> tuple[list[PromptTemplate], list[str]]:
    """Read a JSONL seeds file of {"id": ..., "text": ...} objects.

    Returns (templates, errors); every bad line is reported, none silently
    skipped.
    """
    path = Path(path)
    if not path.exists():
        return [], [f"seeds file not found: {path}"]
    templates: list[PromptTemplate] = []
    errors: list[str] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(f"line {lineno}: invalid JSON ({exc.msg})")
                continue
            if not isinstance(obj, dict) or "text" not in obj:
                errors.append(f"line {lineno}: seed needs a 'text' field")
                continue
            seed_id = str(obj.get("id") or f"seed-{lineno}")
            if seed_id in seen_ids:
                errors.append(f"line {lineno}: duplicate seed id {seed_id!r}")
                continue
            try:
                templates.append(validate_template(obj["text"], template_id=seed_id))
            except ValidationError as exc:
                errors.append(f"line {lineno}: seed {seed_id!r}: {exc}")
                continue
            seen_ids.add(seed_id)
    if not templates and not errors:
        errors.append("seeds file is empty")
    return templates, errors
