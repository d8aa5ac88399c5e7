"""Star/planet geometry, source moments and SPADE bucket probabilities.

All lengths are in units of the Gaussian PSF width. The detected observable
is a two-bucket outcome: a photon in HG00, or a photon in HG10 + HG01.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable, Sequence

from .errors import DomainError, IndexOutOfRange, OutOfExpansionRange

MAX_MODE_INDEX = 2
PROB_TOL = 1e-12


class Formulation(str, Enum):
    """Which quantity is held fixed across the two hypotheses."""

    STAR_FIXED = "star_fixed"
    CENTROID_FIXED = "centroid_fixed"


class Alignment(str, Enum):
    """Where the demultiplexer axis sits."""

    STAR = "star"
    CENTROID = "centroid"


class Hypothesis(IntEnum):
    H0 = 0
    H1 = 1


class Order(str, Enum):
    LEADING = "leading"
    WITH_M4 = "with_m4"


@dataclass(frozen=True)
class SourceScene:
    """Intensity ratio and normalized separation of a star/planet pair.

    ``d_x`` and ``d_y`` are the planet-star separation in PSF widths.
    """

    epsilon: float
    d_x: float
    d_y: float = 0.0
    formulation: Formulation = Formulation.STAR_FIXED
    alignment: Alignment = Alignment.STAR

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation(self.formulation))
        object.__setattr__(self, "alignment", Alignment(self.alignment))
        for name in ("epsilon", "d_x", "d_y"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if not 0.0 <= self.epsilon < 0.5:
            raise DomainError(f"epsilon must lie in [0, 0.5), got {self.epsilon}")

    @property
    def d_a(self) -> float:
        return math.hypot(self.d_x, self.d_y)

    @classmethod
    def from_raw(cls, epsilon: float, d_um: float, w0_um: float, **kw) -> "SourceScene":
        """Build a scene from a physical separation and beam waist (same units)."""
        if w0_um <= 0:
            raise DomainError(f"waist must be positive, got {w0_um}")
        return cls(epsilon, d_um / w0_um, **kw)

    def point_sources(self, hypothesis: Hypothesis) -> list[tuple[float, float, float]]:
        """Weighted point sources ``(weight, x, y)`` in the demultiplexer frame."""
        eps, dx, dy = self.epsilon, self.d_x, self.d_y
        if self.formulation is Formulation.STAR_FIXED:
            star = (0.0, 0.0)
            planet = (dx, dy)
            single = star
        else:
            star = (-eps * dx, -eps * dy)
            planet = ((1 - eps) * dx, (1 - eps) * dy)
            single = (0.0, 0.0)
        centroid = ((1 - eps) * star[0] + eps * planet[0],
                    (1 - eps) * star[1] + eps * planet[1])
        ox, oy = star if self.alignment is Alignment.STAR else centroid

        if Hypothesis(hypothesis) is Hypothesis.H0:
            return [(1.0, single[0] - ox, single[1] - oy)]
        return [(1.0 - eps, star[0] - ox, star[1] - oy),
                (eps, planet[0] - ox, planet[1] - oy)]


@dataclass(frozen=True)
class Moments:
    m2_h0: float
    m2_h1: float
    m4_h0: float
    m4_h1: float


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probability of a photon in HG00 (``p0``) or in HG10 + HG01 (``p1``)."""

    p0: float
    p1: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= 1.0 and 0.0 <= self.p1 <= 1.0):
            raise DomainError(f"probabilities out of [0, 1]: ({self.p0}, {self.p1})")
        if abs(self.p0 + self.p1 - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities do not sum to 1: ({self.p0}, {self.p1})")

    @classmethod
    def from_p1(cls, p1: float) -> "OutcomeDistribution":
        return cls(1.0 - p1, p1)

    def as_tuple(self) -> tuple[float, float]:
        return (self.p0, self.p1)


def _radial_moment(sources: Iterable[tuple[float, float, float]], power: int) -> float:
    return math.fsum(w * (x * x + y * y) ** (power // 2) for w, x, y in sources)


def second_moment(scene: SourceScene, hypothesis: Hypothesis) -> float:
    """Exact second moment of the point-source mixture about the demultiplexer axis."""
    return _radial_moment(scene.point_sources(hypothesis), 2)


def fourth_moment(scene: SourceScene, hypothesis: Hypothesis) -> float:
    return _radial_moment(scene.point_sources(hypothesis), 4)


def moments(scene: SourceScene) -> Moments:
    return Moments(
        m2_h0=second_moment(scene, Hypothesis.H0),
        m2_h1=second_moment(scene, Hypothesis.H1),
        m4_h0=fourth_moment(scene, Hypothesis.H0),
        m4_h1=fourth_moment(scene, Hypothesis.H1),
    )


def spade_probabilities(
    scene: SourceScene,
    hypothesis: Hypothesis,
    order: Order = Order.LEADING,
) -> OutcomeDistribution:
    """Bucket probabilities from the moment expansion.

    Leading order: ``p1 = M2/4``. With the fourth moment:
    ``p1 = M2/4 - M4/16``. In both cases ``p0 = 1 - p1``.
    """
    order = Order(order)
    p1 = second_moment(scene, hypothesis) / 4.0
    if order is Order.WITH_M4:
        p1 -= fourth_moment(scene, hypothesis) / 16.0
    if not 0.0 <= p1 <= 1.0:
        raise OutOfExpansionRange(
            f"bucket probability {p1:.6g} outside [0, 1] for {scene}; "
            "separation too large for the moment expansion")
    return OutcomeDistribution(1.0 - p1, p1)


def gamma_coefficient(
    sources: Sequence[tuple[float, float, float]],
    n: int, n_: int, m: int, m_: int,
) -> float:
    """Single-photon density-matrix element between HG(n, n_) and HG(m, m_).

    ``sources`` is a list of ``(weight, x, y)`` point sources whose weights
    sum to 1. For point sources the source-plane integral is a weighted sum of
    ``exp(-(x^2+y^2)/4) (x/2)^(n+m) (y/2)^(n_+m_) / sqrt(n! m! n_! m_!)``.
    """
    for idx in (n, n_, m, m_):
        if not 0 <= idx <= MAX_MODE_INDEX:
            raise IndexOutOfRange(f"mode index {idx} outside 0..{MAX_MODE_INDEX}")
    total = math.fsum(w for w, _, _ in sources)
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"source weights sum to {total}, expected 1")
    norm = math.sqrt(math.factorial(n) * math.factorial(m)
                     * math.factorial(n_) * math.factorial(m_))
    return math.fsum(
        w * math.exp(-(x * x + y * y) / 4.0)
        * (x / 2.0) ** (n + m) * (y / 2.0) ** (n_ + m_) / norm
        for w, x, y in sources
    )


def gamma_bucket_probabilities(
    sources: Sequence[tuple[float, float, float]],
) -> OutcomeDistribution:
    """Two-bucket outcome from the gamma coefficients, renormalized over the buckets."""
    g00 = gamma_coefficient(sources, 0, 0, 0, 0)
    g1 = gamma_coefficient(sources, 1, 0, 1, 0) + gamma_coefficient(sources, 0, 1, 0, 1)
    p1 = g1 / (g00 + g1)
    return OutcomeDistribution(1.0 - p1, p1)
