"""Linear map from encoder space (dim d) into decoder token-embedding space (dim m).

Application is a plain matrix-vector product. Fitting solves the ridge
normal equations in closed form with a symmetric positive-definite
factorization; the bias column, when requested, is not penalized. Weights
round-trip through a human-inspectable JSON file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import as_vector
from .errors import ValidationError

# condition estimate above this, with zero regularization, is treated as rank-deficient
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class LinearProjector:
    """Weight matrix of shape (output_dim, input_dim) plus optional bias."""

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise ValidationError(f"projector weights must be 2-D, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValidationError("projector weights contain non-finite entries")
        object.__setattr__(self, "weights", w)
        if self.bias is not None:
            b = as_vector(self.bias, dim=w.shape[0], name="projector bias")
            object.__setattr__(self, "bias", b)

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]


def apply(projector: LinearProjector, vec) -> np.ndarray:
    """Project a d-vector to an m-vector: weights @ vec (+ bias)."""
    v = as_vector(vec, dim=projector.input_dim, name="projector input")
    out = projector.weights @ v
    if projector.bias is not None:
        out = out + projector.bias
    return out


@dataclass(frozen=True)
class PairedCorpus:
    """Training pairs: rows of inputs (n, d) aligned with targets (n, m)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if x.ndim != 2 or y.ndim != 2:
            raise ValidationError("corpus inputs and targets must be 2-D arrays")
        if x.shape[0] != y.shape[0]:
            raise ValidationError(
                f"corpus has {x.shape[0]} inputs but {y.shape[0]} targets"
            )
        if x.shape[0] < 1:
            raise ValidationError("corpus needs at least one pair")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("corpus contains non-finite entries")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", y)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple]) -> "PairedCorpus":
        if not pairs:
            raise ValidationError("corpus needs at least one pair")
        xs = [as_vector(x, name="pair input") for x, _ in pairs]
        ys = [as_vector(y, name="pair target") for _, y in pairs]
        for i, (x, y) in enumerate(zip(xs, ys)):
            if x.size != xs[0].size or y.size != ys[0].size:
                raise ValidationError(
                    f"pair {i} has dimensions ({x.size}, {y.size}), "
                    f"expected ({xs[0].size}, {ys[0].size})"
                )
        return cls(inputs=np.array(xs), targets=np.array(ys))


def load_paired_corpus(path: str | Path) -> PairedCorpus:
    """Read JSONL pairs with fields ``x`` (length d) and ``y`` (length m)."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"pairs file not found: {path}")
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if "x" not in obj or "y" not in obj:
                raise ValidationError(f"line {lineno}: pair needs 'x' and 'y' fields")
            pairs.append((obj["x"], obj["y"]))
    if not pairs:
        raise ValidationError("empty pairs file")
    return PairedCorpus.from_pairs(pairs)


def fit_ridge(corpus: PairedCorpus, regularization: float = 0.0,
              with_bias: bool = False) -> LinearProjector:
    """Minimize sum ||W x + b - y||^2 + reg * ||W||_F^2 in closed form.

    Solves the normal equations with a Cholesky factorization; the bias term
    is left unpenalized. A rank-deficient design with zero regularization is
    rejected with advice to set reg > 0. Deterministic.
    """
    if regularization < 0:
        raise ValidationError(f"regularization must be >= 0, got {regularization}")
    x = corpus.inputs
    y = corpus.targets
    n, d = x.shape
    if with_bias:
        x = np.hstack([x, np.ones((n, 1))])
    gram = x.T @ x
    penalty = np.eye(x.shape[1])
    if with_bias:
        penalty[-1, -1] = 0.0
    system = gram + regularization * penalty
    if regularization == 0.0:
        cond = np.linalg.cond(system)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise ValidationError(
                f"design matrix is rank-deficient (condition estimate {cond:.2e}); "
                "set regularization > 0"
            )
    rhs = x.T @ y
    try:
        factor = scipy.linalg.cho_factor(system, lower=True)
        solution = scipy.linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(
            f"normal equations are not positive definite ({exc}); set regularization > 0"
        ) from exc
    if with_bias:
        return LinearProjector(weights=solution[:-1].T, bias=solution[-1])
    return LinearProjector(weights=solution.T)


def residual(projector: LinearProjector, corpus: PairedCorpus) -> float:
    """Root-mean-square residual of the projector over the corpus."""
    pred = corpus.inputs @ projector.weights.T
    if projector.bias is not None:
        pred = pred + projector.bias
    return float(np.sqrt(np.mean((pred - corpus.targets) ** 2)))


def save_weights(projector: LinearProjector, path: str | Path) -> None:
    """Write dims, bias flag, and row-major weights as inspectable JSON."""
    payload = {
        "input_dim": projector.input_dim,
        "output_dim": projector.output_dim,
        "has_bias": projector.bias is not None,
        "weights": [float(v) for v in projector.weights.ravel()],
    }
    if projector.bias is not None:
        payload["bias"] = [float(v) for v in projector.bias]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_weights(path: str | Path) -> LinearProjector:
    """Inverse of save_weights; shape mismatches and unreadable files error."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"weight file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"unreadable weight file {path}: {exc}") from exc
    try:
        d = int(payload["input_dim"])
        m = int(payload["output_dim"])
        has_bias = bool(payload["has_bias"])
        flat = payload["weights"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"weight file {path} is missing header fields: {exc!r}") from exc
    if len(flat) != d * m:
        raise ValidationError(
            f"weight file header says {m}x{d} but {len(flat)} numbers are present"
        )
    weights = np.asarray(flat, dtype=float).reshape(m, d)
    bias = None
    if has_bias:
        raw = payload.get("bias")
        if raw is None or len(raw) != m:
            raise ValidationError(f"weight file header promises a bias of length {m}")
        bias = np.asarray(raw, dtype=float)
    return LinearProjector(weights=weights, bias=bias)
