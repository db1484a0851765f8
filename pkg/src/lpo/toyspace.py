"""Synthetic, exactly invertible prompt space for end-to-end oracle tests.

A toy prompt is the canonical string ``"k1=v1;k2=v2;..."`` with one value in
[0, 1] per named parameter. Encoding parses the values into a vector and
decoding formats them back; the round trip is exact because values are
serialized with Python's shortest round-trip float repr.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import PLACEHOLDER, as_vector
from .errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToySpaceSpec:
    """Names the toy parameters; the space dimension equals their count."""

    parameter_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.parameter_names) < 1:
            raise ValidationError("toy space needs at least one parameter")
        if len(set(self.parameter_names)) != len(self.parameter_names):
            raise ValidationError("toy parameter names must be unique")

    @property
    def dimension(self) -> int:
        return len(self.parameter_names)


def strip_placeholder(text: str) -> str:
    """Drop the input placeholder (and surrounding whitespace) from toy text.

    Decoded toy prompts gain a trailing ``{text}`` placeholder during format
    refinement; parsing ignores it.
    """
    return text.replace(PLACEHOLDER, " ").strip().strip(";").strip()


def toy_encode(spec: ToySpaceSpec, prompt_text: str) -> np.ndarray:
    """Parse a canonical toy string into its parameter vector.

    Every parameter named by ``spec`` must appear with a value in [0, 1];
    unknown or missing parameters are errors.
    """
    values: dict[str, float] = {}
    for part in prompt_text.strip().split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValidationError(f"toy prompt segment {part!r} is not 'name=value'")
        name, _, raw = part.partition("=")
        name = name.strip()
        if name not in spec.parameter_names:
            raise ValidationError(f"unknown toy parameter {name!r}")
        if name in values:
            raise ValidationError(f"duplicate toy parameter {name!r}")
        try:
            value = float(raw)
        except ValueError:
            raise ValidationError(f"toy parameter {name!r} has non-numeric value {raw!r}") from None
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"toy parameter {name!r}={value} outside [0, 1]")
        values[name] = value
    missing = [n for n in spec.parameter_names if n not in values]
    if missing:
        raise ValidationError(f"toy prompt missing parameters: {missing}")
    return np.array([values[n] for n in spec.parameter_names], dtype=float)


def toy_decode(spec: ToySpaceSpec, vector) -> str:
    """Format a vector back to the canonical toy string.

    Coordinates outside [0, 1] are clamped with a warning: extrapolated and
    perturbed candidates legitimately leave the seed hull but must still
    decode to a usable prompt.
    """
    vec = as_vector(vector, dim=spec.dimension, name="toy vector")
    clipped = np.clip(vec, 0.0, 1.0)
    if not np.array_equal(clipped, vec):
        logger.warning("toy decode clamped %d coordinate(s) into [0, 1]",
                       int(np.sum(clipped != vec)))
    return ";".join(
        f"{name}={float(v)!r}" for name, v in zip(spec.parameter_names, clipped)
    )
