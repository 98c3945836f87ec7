"""Common result record for every threshold-visibility estimator."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

from .errors import InvalidInputError

PROVENANCES = ("analytic", "mc-search", "oracle", "bell", "chsh")


@dataclass(frozen=True)
class VisibilityEstimate:
    """A visibility value plus enough metadata to reproduce it.

    ``n_settings`` is the number of measurement settings per side the
    estimate refers to (0 when the notion does not apply, e.g. an
    extrapolated limit).  ``std_error`` is None for exact results.
    """

    value: float
    std_error: Optional[float]
    n_settings: int
    provenance: str
    seed: int
    iterations_used: int

    def __post_init__(self) -> None:
        value = float(self.value)
        if not math.isfinite(value) or value < 0.0 or value > 1.0:
            raise InvalidInputError(f"estimate value must lie in [0, 1], got {value!r}")
        object.__setattr__(self, "value", value)
        if self.std_error is not None:
            err = float(self.std_error)
            if not math.isfinite(err) or err < 0.0:
                raise InvalidInputError(f"std_error must be >= 0, got {err!r}")
            object.__setattr__(self, "std_error", err)
        if self.provenance not in PROVENANCES:
            raise InvalidInputError(
                f"provenance must be one of {PROVENANCES}, got {self.provenance!r}"
            )
        for name in ("n_settings", "seed", "iterations_used"):
            raw = getattr(self, name)
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise InvalidInputError(f"{name} must be an int, got {raw!r}")
        if self.n_settings < 0 or self.iterations_used < 0:
            raise InvalidInputError("n_settings and iterations_used must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "VisibilityEstimate":
        try:
            return cls(
                value=data["value"],
                std_error=data["std_error"],
                n_settings=data["n_settings"],
                provenance=data["provenance"],
                seed=data["seed"],
                iterations_used=data["iterations_used"],
            )
        except KeyError as exc:
            raise InvalidInputError(f"estimate dict is missing key {exc}") from exc
