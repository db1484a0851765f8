"""Candidate generation in the latent space: blend, exaggerate, or drift.

Three strategies produce new points from seed embeddings: interpolation
(convex blend of two seeds), extrapolation (the same line, outside the
segment), and isotropic Gaussian perturbation of a single seed. Every
candidate carries full provenance and is reproducible bit-for-bit from the
policy's rng seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import PromptTemplate, as_vector
from .errors import ValidationError

STRATEGIES = ("interpolate", "extrapolate", "perturb")

# candidates closer than this (L-inf) to an earlier one are regenerated once
DUPLICATE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ExplorationPolicy:
    """How to sample candidate latent points.

    ``strategy_mix`` weights the three strategies; the default searches by
    interpolation only. ``blend_range`` bounds the interpolation weight (a
    symmetric band around 0.5 keeps blends balanced), ``extrapolation_range``
    is a pair of intervals outside [0, 1], and ``sigma`` is the perturbation
    scale (None selects 0.1 x mean seed norm at generation time).
    """

    strategy_mix: dict[str, float] = field(default_factory=lambda: {"interpolate": 1.0})
    blend_range: tuple[float, float] = (0.35, 0.65)
    extrapolation_range: tuple[tuple[float, float], tuple[float, float]] = (
        (-0.5, 0.0),
        (1.0, 1.5),
    )
    sigma: float | None = None
    rng_seed: int = 0
    candidate_count: int = 15

    def __post_init__(self) -> None:
        unknown = set(self.strategy_mix) - set(STRATEGIES)
        if unknown:
            raise ValidationError(f"unknown strategies in mix: {sorted(unknown)}")
        weights = [self.strategy_mix.get(s, 0.0) for s in STRATEGIES]
        if any(w < 0 for w in weights):
            raise ValidationError("strategy weights must be >= 0")
        if sum(weights) <= 0:
            raise ValidationError("strategy weights must not all be zero")
        lo, hi = self.blend_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValidationError(f"blend_range must be within [0, 1], got {self.blend_range}")
        for a, b in self.extrapolation_range:
            if a > b:
                raise ValidationError("extrapolation intervals must be ordered")
        if self.sigma is not None and self.sigma < 0:
            raise ValidationError("sigma must be >= 0")
        if self.candidate_count < 1:
            raise ValidationError("candidate_count must be >= 1")


@dataclass(frozen=True)
class Provenance:
    """Where a candidate came from: strategy, parents, and draw parameters."""

    kind: str
    parents: tuple[str, ...]
    weight: float | None = None
    sigma: float | None = None
    noise_seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in STRATEGIES:
            raise ValidationError(f"unknown provenance kind {self.kind!r}")
        if self.kind == "interpolate" and not 0.0 <= (self.weight or 0.0) <= 1.0:
            raise ValidationError(f"interpolation weight {self.weight} outside [0, 1]")
        if self.kind == "extrapolate" and self.weight is not None and 0.0 <= self.weight <= 1.0:
            raise ValidationError(f"extrapolation weight {self.weight} inside [0, 1]")


@dataclass
class CandidateRecord:
    """One explored latent point plus everything needed to audit it."""

    id: str
    embedding: np.ndarray
    provenance: Provenance
    decoded_text: str | None = None
    refined_template: PromptTemplate | None = None
    invalid_reason: str | None = None


def interpolate(a, b, weight: float) -> np.ndarray:
    """Convex blend ``weight * a + (1 - weight) * b`` with weight in [0, 1]."""
    va = as_vector(a, name="first embedding")
    vb = as_vector(b, dim=va.size, name="second embedding")
    if not 0.0 <= weight <= 1.0:
        raise ValidationError(f"interpolation weight {weight} outside [0, 1]")
    return weight * va + (1.0 - weight) * vb


def extrapolate(a, b, weight: float) -> np.ndarray:
    """Same line as interpolate but past the endpoints: weight outside [0, 1]."""
    va = as_vector(a, name="first embedding")
    vb = as_vector(b, dim=va.size, name="second embedding")
    if 0.0 <= weight <= 1.0:
        raise ValidationError(
            f"extrapolation weight {weight} lies inside [0, 1]; use interpolate"
        )
    return weight * va + (1.0 - weight) * vb


def perturb(vec, sigma: float, noise_seed: int) -> np.ndarray:
    """Add zero-mean isotropic Gaussian noise with per-coordinate stddev sigma.

    The noise stream is fully determined by ``noise_seed``, so a stored seed
    replays the exact perturbation.
    """
    v = as_vector(vec, name="embedding")
    if sigma < 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return v.copy()
    noise = np.random.default_rng(noise_seed).normal(0.0, sigma, size=v.size)
    return v + noise


def _sample_outside_unit(rng: np.random.Generator,
                         intervals: tuple[tuple[float, float], ...]) -> float:
    lengths = np.array([hi - lo for lo, hi in intervals], dtype=float)
    if lengths.sum() <= 0:
        raise ValidationError("extrapolation intervals have zero total length")
    probs = lengths / lengths.sum()
    # endpoints shared with [0, 1] have measure zero but uniform() can return
    # its low bound exactly; redraw the rare invalid hit
    for _ in range(100):
        lo, hi = intervals[int(rng.choice(len(intervals), p=probs))]
        value = float(rng.uniform(lo, hi))
        if not 0.0 <= value <= 1.0:
            return value
    raise ValidationError("could not sample an extrapolation weight outside [0, 1]")


def generate_candidates(
    seeds: Sequence[tuple[str, np.ndarray]],
    policy: ExplorationPolicy,
) -> list[CandidateRecord]:
    """Draw exactly ``candidate_count`` candidates with full provenance.

    Per candidate: the strategy is sampled by mix weight, two distinct
    parents are drawn uniformly (one parent for perturbation), and the blend
    weight or noise seed is drawn from the applicable range. Parent pairs may
    repeat across candidates. Near-duplicate embeddings (within L-inf 1e-12
    of an earlier candidate) are regenerated once, then kept.
    """
    if not seeds:
        raise ValidationError("generate_candidates needs at least one seed")
    ids = [sid for sid, _ in seeds]
    if len(set(ids)) != len(ids):
        raise ValidationError("seed ids must be unique")
    vectors = [as_vector(v, name=f"seed {sid}") for sid, v in seeds]
    dim = vectors[0].size
    for sid, vec in zip(ids, vectors):
        if vec.size != dim:
            raise ValidationError(f"seed {sid} has dimension {vec.size}, expected {dim}")

    names = [s for s in STRATEGIES if policy.strategy_mix.get(s, 0.0) > 0]
    weights = np.array([policy.strategy_mix[s] for s in names], dtype=float)
    probs = weights / weights.sum()
    pairwise = {"interpolate", "extrapolate"} & set(names)
    if pairwise and len(seeds) < 2:
        raise ValidationError(f"{sorted(pairwise)} requested with a single seed")

    sigma = policy.sigma
    if sigma is None:
        sigma = 0.1 * float(np.mean([np.linalg.norm(v) for v in vectors]))

    rng = np.random.default_rng(policy.rng_seed)
    candidates: list[CandidateRecord] = []

    def draw(index: int) -> CandidateRecord:
        strategy = names[int(rng.choice(len(names), p=probs))]
        if strategy == "perturb":
            parent = int(rng.integers(len(seeds)))
            noise_seed = int(rng.integers(0, 2**63 - 1))
            embedding = perturb(vectors[parent], sigma, noise_seed)
            prov = Provenance(kind="perturb", parents=(ids[parent],),
                              sigma=sigma, noise_seed=noise_seed)
        else:
            i, j = (int(x) for x in rng.choice(len(seeds), size=2, replace=False))
            if strategy == "interpolate":
                weight = float(rng.uniform(*policy.blend_range))
                embedding = interpolate(vectors[i], vectors[j], weight)
            else:
                weight = _sample_outside_unit(rng, policy.extrapolation_range)
                embedding = extrapolate(vectors[i], vectors[j], weight)
            prov = Provenance(kind=strategy, parents=(ids[i], ids[j]), weight=weight)
        return CandidateRecord(id=f"cand-{index:02d}", embedding=embedding, provenance=prov)

    for index in range(policy.candidate_count):
        candidate = draw(index)
        if any(
            np.max(np.abs(candidate.embedding - prior.embedding)) <= DUPLICATE_TOLERANCE
            for prior in candidates
        ):
            candidate = draw(index)
        candidates.append(candidate)
    return candidates
