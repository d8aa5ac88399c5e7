"""Entropy sweeps over separation and crosstalk (plot-ready rows)."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, fields

from .crosstalk import CrosstalkMatrix
from .errors import ConfigError, DomainError, OutOfRegime
from .information import (advantage_ratio, di_relative_entropy, quantum_relative_entropy,
                          spade_relative_entropy_approx, spade_relative_entropy_exact)
from .scene import Alignment, Formulation, SourceScene

ENTROPY_COLUMNS = ("epsilon", "d_a", "C10", "C01", "D_Q", "D_DI",
                   "D_SD_exact", "D_SD_approx", "advantage_ratio")


@dataclass
class EntropySweepConfig:
    """Grid for the entropy tables. ``c01=None`` pairs each c10 with c01 = c10.

    With ``w0_um`` set, ``d_a`` values are physical separations in micrometres
    and are divided by the waist once, in :meth:`separations`.
    """

    epsilon: list[float] = field(default_factory=lambda: [0.042])
    d_a: list[float] = field(default_factory=lambda: [0.33])
    c10: list[float] = field(default_factory=lambda: [0.01])
    c01: list[float] | None = None
    w0_um: float | None = None
    formulation: str = "star_fixed"
    alignment: str = "star"
    strict: bool = False

    @classmethod
    def from_dict(cls, raw: dict) -> "EntropySweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        for name in ("epsilon", "d_a", "c10") + (("c01",) if self.c01 is not None else ()):
            vals = getattr(self, name)
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"{name}: must be a nonempty list of numbers")
            if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals):
                raise ConfigError(f"{name}: must contain finite numbers only")
        if any(not 0 <= e < 0.5 for e in self.epsilon):
            raise ConfigError("epsilon: values must lie in [0, 0.5)")
        if any(d < 0 for d in self.d_a):
            raise ConfigError("d_a: values must be nonnegative")
        for name in ("c10", "c01"):
            vals = getattr(self, name) or []
            if any(not 0 <= c <= 1 for c in vals):
                raise ConfigError(f"{name}: values must lie in [0, 1]")
        if self.w0_um is not None and not self.w0_um > 0:
            raise ConfigError("w0_um: must be positive")
        try:
            Formulation(self.formulation)
            Alignment(self.alignment)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def separations(self) -> list[float]:
        if self.w0_um is None:
            return [float(d) for d in self.d_a]
        return [d / self.w0_um for d in self.d_a]

    def crosstalk_pairs(self) -> list[tuple[float, float]]:
        if self.c01 is None:
            return [(float(c), float(c)) for c in self.c10]
        return [(float(a), float(b)) for a, b in itertools.product(self.c10, self.c01)]


def _cell(fn, strict: bool) -> float:
    try:
        return fn()
    except (OutOfRegime, DomainError):
        if strict:
            raise
        return math.nan


def entropy_sweep_rows(cfg: EntropySweepConfig) -> list[tuple]:
    """One row per (epsilon, d_a, c10, c01); undefined cells are NaN unless ``strict``."""
    cfg.validate()
    rows = []
    for eps, d_a in itertools.product(cfg.epsilon, cfg.separations()):
        scene = SourceScene(float(eps), d_a, 0.0, cfg.formulation, cfg.alignment)
        d_q = _cell(lambda: quantum_relative_entropy(scene), cfg.strict)
        d_di = _cell(lambda: di_relative_entropy(scene), cfg.strict)
        for c10, c01 in cfg.crosstalk_pairs():
            ct = CrosstalkMatrix.from_off_diagonal(c10, c01)
            rows.append((
                float(eps), d_a, c10, c01, d_q, d_di,
                _cell(lambda: spade_relative_entropy_exact(scene, ct), cfg.strict),
                _cell(lambda: spade_relative_entropy_approx(scene, ct), cfg.strict),
                _cell(lambda: advantage_ratio(ct), cfg.strict),
            ))
    return rows
