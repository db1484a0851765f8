"""Domain types, dataset ingestion and splitting, prompt-template rendering.

Everything here is immutable after construction and free of I/O except the
dataset loaders. Labels are normalized to lowercase at ingestion because all
label comparison in the pipeline is case-insensitive after trimming.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

PLACEHOLDER = "{text}"

ORIGINS = ("seed", "decoded", "refined")


@dataclass(frozen=True)
class PromptTemplate:
    """An instruction text with exactly one input placeholder.

    The placeholder is the literal string ``{text}``; it marks where the
    task input is substituted at render time.
    """

    id: str
    text: str
    origin: str = "seed"

    def __post_init__(self) -> None:
        _check_template_text(self.text)
        if self.origin not in ORIGINS:
            raise ValidationError(f"unknown template origin {self.origin!r}")


def _check_template_text(text: str) -> None:
    if not text or not text.strip():
        raise ValidationError("template text is blank")
    count = text.count(PLACEHOLDER)
    if count == 0:
        raise ValidationError(f"template has no {PLACEHOLDER!r} placeholder")
    if count > 1:
        raise ValidationError(
            f"template has {count} {PLACEHOLDER!r} placeholders, expected exactly 1"
        )


def validate_template(text: str, template_id: str = "", origin: str = "seed") -> PromptTemplate:
    """Return a PromptTemplate iff ``text`` is non-blank and has exactly one placeholder.

    Blank text, a missing placeholder, and multiple placeholders are each
    reported distinctly via ValidationError.
    """
    _check_template_text(text)
    tid = template_id or "t-" + text_digest(text)[:8]
    return PromptTemplate(id=tid, text=text, origin=origin)


def render_prompt(template: PromptTemplate, input_text: str) -> str:
    """Substitute ``input_text`` for the single placeholder occurrence.

    The input is inserted literally; a placeholder inside ``input_text`` is
    not substituted recursively.
    """
    return template.text.replace(PLACEHOLDER, input_text, 1)


@dataclass(frozen=True)
class Example:
    """One labeled task input."""

    text: str
    label: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError("example text is empty")
        if not self.label:
            raise ValidationError("example label is empty")


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of examples plus the label universe.

    ``label_set`` is the sorted unique labels seen in the examples, or a
    declared superset of them.
    """

    examples: tuple[Example, ...]
    label_set: tuple[str, ...]

    def __post_init__(self) -> None:
        seen = {ex.label for ex in self.examples}
        missing = seen - set(self.label_set)
        if missing:
            raise ValidationError(f"examples use labels outside label_set: {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.examples)

    def fingerprint(self) -> str:
        """Stable content hash identifying this exact example sequence."""
        h = hashlib.sha256()
        for ex in self.examples:
            h.update(ex.text.encode("utf-8"))
            h.update(b"\x1f")
            h.update(ex.label.encode("utf-8"))
            h.update(b"\x1e")
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class SplitSpec:
    """Validation split size and the seed for the deterministic shuffle."""

    validation_fraction: float
    rng_seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValidationError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )


def normalize_label(label: str) -> str:
    return label.strip().lower()


def _dataset_from_records(
    records: Iterable[tuple[int, str, str]],
    labels: Sequence[str] | None,
) -> Dataset:
    examples = []
    for lineno, text, label in records:
        if text is None or str(text).strip() == "":
            raise ValidationError(f"line {lineno}: empty 'text' field")
        if label is None or str(label).strip() == "":
            raise ValidationError(f"line {lineno}: missing 'label' field")
        examples.append(Example(text=str(text), label=normalize_label(str(label))))
    if not examples:
        raise ValidationError("empty dataset")
    if labels is not None:
        label_set = tuple(sorted({normalize_label(l) for l in labels}))
    else:
        label_set = tuple(sorted({ex.label for ex in examples}))
    return Dataset(examples=tuple(examples), label_set=label_set)


def load_dataset(path: str | Path, format: str | None = None,
                 labels: Sequence[str] | None = None) -> Dataset:
    """Load a labeled dataset from JSONL or CSV, preserving file order.

    JSONL records carry ``text`` and ``label`` fields; CSV files carry a
    ``text,label`` header and exactly those two columns. Malformed records
    are reported with their line number. ``labels`` optionally declares the
    label universe as a superset of what occurs in the file.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"dataset file not found: {path}")
    fmt = format or ("csv" if path.suffix.lower() == ".csv" else "jsonl")
    if fmt == "jsonl":
        return _load_jsonl(path, labels)
    if fmt == "csv":
        return _load_csv(path, labels)
    raise ValidationError(f"unknown dataset format {fmt!r}")


def _load_jsonl(path: Path, labels: Sequence[str] | None) -> Dataset:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ValidationError(f"line {lineno}: record is not an object")
            if "text" not in obj:
                raise ValidationError(f"line {lineno}: missing 'text' field")
            if "label" not in obj:
                raise ValidationError(f"line {lineno}: missing 'label' field")
            records.append((lineno, obj["text"], obj["label"]))
    return _dataset_from_records(records, labels)


def _load_csv(path: Path, labels: Sequence[str] | None) -> Dataset:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError("empty dataset") from None
        if [c.strip().lower() for c in header] != ["text", "label"]:
            raise ValidationError(
                f"line 1: expected header 'text,label', got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValidationError(f"line {lineno}: expected 2 columns, got {len(row)}")
            records.append((lineno, row[0], row[1]))
    return _dataset_from_records(records, labels)


def split_dataset(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition into (validation, remainder) by a seeded deterministic shuffle.

    The validation part holds ``round(validation_fraction * len(dataset))``
    examples. Both parts keep the shuffled order, and both inherit the parent
    label_set. Re-running with an equal SplitSpec is bit-identical.
    """
    n = len(dataset)
    if n == 0:
        raise ValidationError("cannot split an empty dataset")
    n_val = int(round(spec.validation_fraction * n))
    if n_val == 0:
        raise ValidationError(
            f"validation_fraction {spec.validation_fraction} of {n} examples rounds to 0"
        )
    order = np.random.default_rng(spec.rng_seed).permutation(n)
    val = tuple(dataset.examples[i] for i in order[:n_val])
    rem = tuple(dataset.examples[i] for i in order[n_val:])
    return (
        Dataset(examples=val, label_set=dataset.label_set),
        Dataset(examples=rem, label_set=dataset.label_set),
    )


def text_digest(text: str) -> str:
    """Stable hex digest used for cache keys and derived identifiers."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def as_vector(values, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float array, optionally checking its length."""
    vec = np.asarray(values, dtype=float)
    if vec.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got shape {vec.shape}")
    if vec.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(vec)):
        raise ValidationError(f"{name} contains non-finite entries")
    if dim is not None and vec.size != dim:
        raise ValidationError(f"{name} has dimension {vec.size}, expected {dim}")
    return vec
