"""Maps prompt templates to latent embedding vectors.

Real encoding goes through the gateway's embedding backend; the toy-space
encoder from :mod:`lpo.toyspace` is re-exported here for oracle tests. The
backend's vector is taken as-is (no pooling configuration, no fine-tuning);
optionally each vector is rescaled to unit Euclidean norm.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gateway
from .core import PromptTemplate, as_vector
from .errors import ValidationError
from .gateway import BackendConfig, Budget
from .toyspace import ToySpaceSpec, toy_encode  # noqa: F401  (toy oracle surface)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EncoderSpec:
    """Embedding backend plus the expected vector dimension."""

    backend: BackendConfig
    dimension: int
    normalize: bool = False

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValidationError("encoder dimension must be >= 1")


def encode(
    spec: EncoderSpec,
    templates: Sequence[PromptTemplate],
    budget: Budget,
    cache: dict[str, np.ndarray] | None = None,
) -> list[np.ndarray]:
    """Embed templates in order, one vector of dimension d per template.

    ``cache`` maps template text to a previously returned vector; seeds are
    re-encoded every iteration, so the optimizer passes a run-level cache to
    skip repeat backend calls. With ``normalize`` set, non-zero vectors are
    scaled to unit norm; zero vectors are left unscaled and flagged.
    """
    if not templates:
        raise ValidationError("encode called with no templates")
    cache = cache if cache is not None else {}
    missing = [t.text for t in templates if t.text not in cache]
    if missing:
        # dict preserves insertion order and dedups repeated texts
        unique = list(dict.fromkeys(missing))
        vectors = gateway.embed(spec.backend, unique, budget)
        for text, vec in zip(unique, vectors):
            cache[text] = as_vector(vec, dim=spec.dimension, name=f"embedding of {text[:30]!r}")
    out = []
    for t in templates:
        vec = cache[t.text]
        if spec.normalize:
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                logger.warning("zero-norm embedding for template %s left unscaled", t.id)
            else:
                vec = vec / norm
        out.append(vec)
    return out
