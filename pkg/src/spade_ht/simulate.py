"""Monte Carlo photon counts for the SPADE test and samples for direct imaging.

Counts are drawn with numpy's exact binomial/multinomial samplers (inversion
for small means, BTPE above), never with a Gaussian shortcut. All draws come
from :mod:`spade_ht.rng` block streams, so results depend only on the seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import rng
from .crosstalk import CrosstalkMatrix
from .errors import DomainError, EmptyBatch
from .information import mixed_probabilities
from .scene import Hypothesis, Order, SourceScene
from .testing import ErrorRates, TestSpec, di_variance_threshold, rate_stderr, reject_h0

# leading stream-key component per sampler, keeps samplers independent under one seed
_FIXED_N, _FIXED_WINDOW, _DIRECT_IMAGING = 1, 2, 3


class Provenance(str, Enum):
    SIMULATED = "simulated"
    INGESTED = "ingested"


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Per-repetition N1 counts, optional totals, and where they came from."""

    counts_n1: np.ndarray
    counts_total: np.ndarray | None = None
    seed: int | None = None
    provenance: Provenance = Provenance.SIMULATED
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        n1 = np.asarray(self.counts_n1)
        if n1.ndim != 1:
            raise DomainError("counts_n1 must be one-dimensional")
        n1 = n1.astype(np.int64)
        if np.any(n1 < 0):
            raise DomainError("counts must be nonnegative")
        object.__setattr__(self, "counts_n1", n1)
        if self.counts_total is not None:
            tot = np.asarray(self.counts_total).astype(np.int64)
            if tot.shape != n1.shape:
                raise DomainError("counts_total and counts_n1 differ in length")
            if np.any(n1 > tot):
                raise DomainError("counts_n1 exceeds counts_total")
            object.__setattr__(self, "counts_total", tot)
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def __len__(self) -> int:
        return int(self.counts_n1.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrialBatch):
            return NotImplemented
        totals_equal = (
            (self.counts_total is None and other.counts_total is None)
            or (self.counts_total is not None and other.counts_total is not None
                and np.array_equal(self.counts_total, other.counts_total)))
        return (np.array_equal(self.counts_n1, other.counts_n1) and totals_equal
                and self.seed == other.seed and self.provenance == other.provenance
                and self.labels == other.labels)


@dataclass(frozen=True)
class FixedWindowConfig:
    """Integration at fixed time: ``n_windows`` temporal modes, each with one
    detected photon with probability ``eta = intensity_rate * tau``."""

    intensity_rate: float
    delta_t: float
    tau: float

    def __post_init__(self):
        if self.tau <= 0 or self.delta_t <= 0 or self.intensity_rate <= 0:
            raise DomainError("intensity_rate, delta_t and tau must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"eta = I*tau = {self.eta} must lie in (0, 1]")
        ratio = self.delta_t / self.tau
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio) or round(ratio) < 1:
            raise DomainError(f"delta_t/tau = {ratio} must be a positive integer")

    @classmethod
    def from_eta(cls, eta: float, n_windows: int) -> "FixedWindowConfig":
        return cls(intensity_rate=eta, delta_t=float(n_windows), tau=1.0)

    @property
    def eta(self) -> float:
        return self.intensity_rate * self.tau

    @property
    def n_windows(self) -> int:
        return int(round(self.delta_t / self.tau))

    @property
    def expected_photons(self) -> float:
        return self.n_windows * self.eta


def _key(kind: int, hypothesis: Hypothesis, stream: Sequence[int]) -> tuple[int, ...]:
    return (*stream, kind, int(hypothesis))


def simulate_fixed_n(
    n_total: int,
    scene: SourceScene,
    ct: CrosstalkMatrix,
    hypothesis: Hypothesis,
    repetitions: int,
    seed: int,
    *,
    order: Order = Order.LEADING,
    stream: Sequence[int] = (),
    workers: int = 1,
) -> TrialBatch:
    """Draw ``N1 ~ Binomial(n_total, P'(1|hypothesis))`` for each repetition."""
    if n_total < 0 or repetitions < 0:
        raise DomainError("n_total and repetitions must be nonnegative")
    p1 = mixed_probabilities(scene, ct, hypothesis, order).p1

    def draw(g: np.random.Generator, size: int) -> np.ndarray:
        return g.binomial(n_total, p1, size=size)

    n1 = rng.run_blocks(seed, _key(_FIXED_N, hypothesis, stream), repetitions, draw, workers)
    return TrialBatch(n1, np.full(repetitions, n_total, dtype=np.int64), seed,
                      labels={"hypothesis": int(hypothesis), "epsilon": scene.epsilon,
                              "d_a": scene.d_a})


def simulate_fixed_window(
    cfg: FixedWindowConfig,
    scene: SourceScene,
    ct: CrosstalkMatrix,
    hypothesis: Hypothesis,
    repetitions: int,
    seed: int,
    *,
    order: Order = Order.LEADING,
    stream: Sequence[int] = (),
    workers: int = 1,
) -> TrialBatch:
    """Trinomial counts over ``cfg.n_windows`` windows: vacuum, HG00 bucket, HG10+HG01 bucket.

    At most one photon is detected per window.
    """
    if not isinstance(cfg, FixedWindowConfig):
        raise DomainError("cfg must be a FixedWindowConfig")
    if repetitions < 0:
        raise DomainError("repetitions must be nonnegative")
    q = mixed_probabilities(scene, ct, hypothesis, order)
    eta = cfg.eta
    pvals = np.array([1.0 - eta, eta * q.p0, eta * q.p1])

    def draw(g: np.random.Generator, size: int) -> np.ndarray:
        return g.multinomial(cfg.n_windows, pvals, size=size).reshape(size, 3)

    cells = rng.run_blocks(seed, _key(_FIXED_WINDOW, hypothesis, stream), repetitions,
                           draw, workers)
    return TrialBatch(cells[:, 2], cells[:, 1] + cells[:, 2], seed,
                      labels={"hypothesis": int(hypothesis), "epsilon": scene.epsilon,
                              "d_a": scene.d_a, "eta": eta})


def _di_offsets(scene: SourceScene, hypothesis: Hypothesis) -> tuple[float, float, float]:
    """(planet fraction, star offset, planet offset) for the centroid-fixed image densities."""
    if Hypothesis(hypothesis) is Hypothesis.H0:
        return 0.0, 0.0, 0.0
    eps, d = scene.epsilon, scene.d_a
    return eps, -eps * d, (1.0 - eps) * d


def simulate_direct_imaging(
    n_total: int,
    scene: SourceScene,
    hypothesis: Hypothesis,
    repetitions: int,
    seed: int,
    *,
    method: str = "chisquare",
    stream: Sequence[int] = (),
    workers: int = 1,
) -> np.ndarray:
    """Mean-square photon position ``sum(x_i^2) / N`` per repetition.

    Photon positions are unit-variance Gaussians centred on the star (weight
    1 - eps) or the planet (weight eps), with the centre of brightness at the
    origin. ``method="positions"`` draws every position; ``"chisquare"`` draws
    the same statistic exactly as a sum of two noncentral chi-squares (star
    and planet photons), which is much cheaper for large N.
    """
    if n_total < 1:
        raise DomainError("n_total must be >= 1")
    frac, a, b = _di_offsets(scene, hypothesis)

    if method == "positions":
        def draw(g: np.random.Generator, size: int) -> np.ndarray:
            out = np.empty(size)
            for i in range(size):
                planet = g.random(n_total) < frac
                x = g.standard_normal(n_total) + np.where(planet, b, a)
                out[i] = np.dot(x, x) / n_total
            return out
    elif method == "chisquare":
        def draw(g: np.random.Generator, size: int) -> np.ndarray:
            k = g.binomial(n_total, frac, size=size)
            return (_ncx2(g, n_total - k, a) + _ncx2(g, k, b)) / n_total
    else:
        raise DomainError(f"unknown method {method!r}")

    return rng.run_blocks(seed, _key(_DIRECT_IMAGING, hypothesis, stream), repetitions,
                          draw, workers)


def _ncx2(g: np.random.Generator, dof: np.ndarray, offset: float) -> np.ndarray:
    """Sum of ``dof`` squared unit normals shifted by ``offset``; 0 where dof == 0."""
    dof = np.asarray(dof)
    safe = np.maximum(dof, 1)
    if offset == 0.0:
        x = g.chisquare(safe)
    else:
        x = g.noncentral_chisquare(safe, safe * offset * offset)
    return np.where(dof > 0, x, 0.0)


def estimate_error_rates(h0: TrialBatch, h1: TrialBatch, spec: TestSpec) -> ErrorRates:
    """Empirical false-positive rate on H0 data and false-negative rate on H1 data."""
    if len(h0) == 0 or len(h1) == 0:
        raise EmptyBatch("both batches need at least one repetition")
    a = float(np.mean(reject_h0(h0.counts_n1, spec)))
    b = float(np.mean(~reject_h0(h1.counts_n1, spec)))
    return ErrorRates(a, b, len(h0), len(h1), rate_stderr(a, len(h0)), rate_stderr(b, len(h1)))


def estimate_di_error_rates(
    n_total: int,
    scene: SourceScene,
    alpha: float,
    repetitions: int,
    seed: int,
    *,
    method: str = "chisquare",
    workers: int = 1,
) -> ErrorRates:
    """Run the variance test: guess H0 when the mean-square position is below ``1 + K sqrt(2/N)``."""
    if repetitions < 1:
        raise EmptyBatch("repetitions must be >= 1")
    cut = di_variance_threshold(n_total, alpha)
    v0 = simulate_direct_imaging(n_total, scene, Hypothesis.H0, repetitions, seed,
                                 method=method, workers=workers)
    v1 = simulate_direct_imaging(n_total, scene, Hypothesis.H1, repetitions, seed,
                                 method=method, workers=workers)
    a = float(np.mean(v0 >= cut))
    b = float(np.mean(v1 < cut))
    return ErrorRates(a, b, repetitions, repetitions,
                      rate_stderr(a, repetitions), rate_stderr(b, repetitions))


def combined_stderr(*errs: float) -> float:
    return math.sqrt(sum(e * e for e in errs))
