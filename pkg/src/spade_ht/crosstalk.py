"""Modal crosstalk as a 2x2 column-stochastic mixing of bucket probabilities."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CrosstalkWarning, DomainError
from .scene import OutcomeDistribution

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class CrosstalkMatrix:
    """``c[j][k]`` is the probability that a photon in bucket k is recorded in bucket j.

    ``c10`` is the leak from HG00 into the HG10 + HG01 bucket.
    """

    c00: float
    c01: float
    c10: float
    c11: float

    def __post_init__(self):
        for name in ("c00", "c01", "c10", "c11"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} outside [0, 1]")
        if (abs(self.c00 + self.c10 - 1.0) > STOCHASTIC_TOL
                or abs(self.c01 + self.c11 - 1.0) > STOCHASTIC_TOL):
            raise DomainError(f"columns of {self} do not sum to 1")
        if self.c10 > 0.5 or self.c01 > 0.5:
            warnings.warn(
                f"off-diagonal crosstalk above 1/2 (c10={self.c10}, c01={self.c01})",
                CrosstalkWarning, stacklevel=3)

    @classmethod
    def from_off_diagonal(cls, c10: float, c01: float) -> "CrosstalkMatrix":
        return cls(c00=1.0 - c10, c01=c01, c10=c10, c11=1.0 - c01)

    @classmethod
    def from_array(cls, a) -> "CrosstalkMatrix":
        a = np.asarray(a, dtype=float)
        return cls(c00=a[0, 0], c01=a[0, 1], c10=a[1, 0], c11=a[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.c00, self.c01], [self.c10, self.c11]])

    @property
    def is_symmetric(self) -> bool:
        return self.c10 == self.c01

    def __matmul__(self, other: "CrosstalkMatrix") -> "CrosstalkMatrix":
        prod = self.matrix @ other.matrix
        # renormalize columns so round-off does not trip the stochastic check
        prod /= prod.sum(axis=0, keepdims=True)
        return CrosstalkMatrix.from_array(prod)


def identity() -> CrosstalkMatrix:
    return CrosstalkMatrix(1.0, 0.0, 0.0, 1.0)


def symmetric(c: float) -> CrosstalkMatrix:
    """Balanced crosstalk: ``c10 = c01 = c``."""
    if not 0.0 <= c <= 0.5:
        raise DomainError(f"symmetric crosstalk must lie in [0, 1/2], got {c}")
    return CrosstalkMatrix(c00=1.0 - c, c01=c, c10=c, c11=1.0 - c)


def apply(ct: CrosstalkMatrix, p: OutcomeDistribution) -> OutcomeDistribution:
    return OutcomeDistribution(ct.c00 * p.p0 + ct.c01 * p.p1,
                               ct.c10 * p.p0 + ct.c11 * p.p1)
