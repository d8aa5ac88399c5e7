"""The parameter-independent SPADE threshold test and its direct-imaging baseline.

H0 (single source) is rejected when the count ``N1`` in the HG10 + HG01 bucket
exceeds a threshold ``N*`` fixed from H0 statistics alone, so the test never
needs the intensity ratio or the separation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize, special, stats

from .crosstalk import CrosstalkMatrix
from .errors import BetaUnderflowWarning, DomainError, EmptyBatch, NoRoot
from .information import mixed_probabilities
from .scene import Hypothesis, Order, SourceScene


class ThresholdSource(str, Enum):
    ANALYTIC = "analytic"
    CALIBRATED = "calibrated"


def k_alpha(alpha: float) -> float:
    """Upper-alpha quantile of the standard normal, ``sqrt(2) erfinv(1 - 2 alpha)``.

    Evaluated as ``sqrt(2) erfcinv(2 alpha)``, which keeps full precision
    for small alpha where ``1 - 2 alpha`` rounds.
    """
    if not 0.0 < alpha <= 0.5:
        raise DomainError(f"alpha must lie in (0, 1/2], got {alpha}")
    return math.sqrt(2.0) * float(special.erfcinv(2.0 * alpha))


def analytic_threshold_raw(n_total: float, ct: CrosstalkMatrix, alpha: float) -> float:
    """Gaussian (1 - alpha) quantile of N1 under H0: ``N c10 + K sqrt(N c10 c00)``."""
    if n_total < 0:
        raise DomainError(f"n_total must be nonnegative, got {n_total}")
    return n_total * ct.c10 + k_alpha(alpha) * math.sqrt(n_total * ct.c10 * ct.c00)


def analytic_threshold(n_total: int, ct: CrosstalkMatrix, alpha: float) -> int:
    """Integer threshold; rounded up so the Gaussian type-I error stays <= alpha."""
    if n_total < 1:
        raise DomainError(f"n_total must be >= 1, got {n_total}")
    return int(math.ceil(analytic_threshold_raw(n_total, ct, alpha)))


def gaussian_type1_error(n_total: float, ct: CrosstalkMatrix, threshold: float) -> float:
    """Gaussian approximation of P(N1 > threshold | H0), no continuity correction."""
    mu = n_total * ct.c10
    sigma = math.sqrt(n_total * ct.c10 * ct.c00)
    if sigma == 0.0:
        return 0.0 if threshold >= mu else 1.0
    return float(special.ndtr(-(threshold - mu) / sigma))


def calibrated_threshold(calibration, alpha: float) -> int:
    """Smallest integer t >= 0 with at most a fraction alpha of calibration counts above t.

    ``calibration`` is a TrialBatch of H0 repetitions or a plain sequence of counts.
    """
    counts = np.asarray(getattr(calibration, "counts_n1", calibration), dtype=np.int64)
    if counts.size == 0:
        raise EmptyBatch("calibration batch is empty")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    ordered = np.sort(counts)
    n = ordered.size
    allowed = alpha * n + 1e-9
    for t in np.concatenate(([0], np.unique(ordered))):
        exceed = n - np.searchsorted(ordered, t, side="right")
        if exceed <= allowed:
            return int(t)
    raise AssertionError("unreachable: the largest count has no exceedances")


@dataclass(frozen=True)
class TestSpec:
    alpha: float
    n_star: int
    source: ThresholdSource = ThresholdSource.ANALYTIC

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_star < 0 or int(self.n_star) != self.n_star:
            raise DomainError(f"n_star must be a nonnegative integer, got {self.n_star}")
        object.__setattr__(self, "n_star", int(self.n_star))
        object.__setattr__(self, "source", ThresholdSource(self.source))

    @classmethod
    def analytic(cls, n_total: int, ct: CrosstalkMatrix, alpha: float) -> "TestSpec":
        return cls(alpha, analytic_threshold(n_total, ct, alpha), ThresholdSource.ANALYTIC)

    @classmethod
    def calibrated(cls, calibration, alpha: float) -> "TestSpec":
        return cls(alpha, calibrated_threshold(calibration, alpha), ThresholdSource.CALIBRATED)


@dataclass(frozen=True)
class TestVerdict:
    decision: Hypothesis
    n1_observed: int
    n_star: int

    __test__ = False


def decide(n1: int, spec: TestSpec) -> TestVerdict:
    decision = Hypothesis.H1 if n1 > spec.n_star else Hypothesis.H0
    return TestVerdict(decision, int(n1), spec.n_star)


def reject_h0(counts, spec: TestSpec) -> np.ndarray:
    """Vectorized decision: True where H0 is rejected."""
    return np.asarray(counts) > spec.n_star


@dataclass(frozen=True)
class ErrorRates:
    alpha_hat: float
    beta_hat: float
    trials_h0: int
    trials_h1: int
    alpha_stderr: float
    beta_stderr: float


def rate_stderr(rate: float, trials: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / trials) if trials else float("nan")


def _finish(log_beta: float) -> float:
    beta = math.exp(log_beta)
    if beta == 0.0 and log_beta > -math.inf:
        warnings.warn(f"beta underflowed (log beta = {log_beta:.6g}); returning 0",
                      BetaUnderflowWarning, stacklevel=3)
    return beta


def spade_log_beta_theory(
    n_total: float,
    scene: SourceScene,
    ct: CrosstalkMatrix,
    alpha: float,
    order: Order = Order.LEADING,
    n_star: float | None = None,
) -> float:
    """Natural log of the Gaussian-approximate SPADE type-II error.

    ``beta = erfc((mu1 - N*) / (sqrt(2) sigma1)) / 2`` with ``mu1 = N P'(1|H1)``,
    ``sigma1^2 = N P'(1|H1) P'(0|H1)`` and the unrounded threshold ``N*``
    unless one is passed. Without crosstalk the binomial is far from Gaussian
    and the exact ``P(N1 <= N*)`` is returned instead.
    """
    q = mixed_probabilities(scene, ct, Hypothesis.H1, order)
    if n_star is None:
        n_star = analytic_threshold_raw(n_total, ct, alpha)
    else:
        k_alpha(alpha)  # validate alpha all the same
    if ct.c10 == 0.0 or q.p1 == 0.0:
        return float(stats.binom.logcdf(math.floor(n_star), int(round(n_total)), q.p1))
    mu1 = n_total * q.p1
    sigma1 = math.sqrt(n_total * q.p1 * q.p0)
    return float(special.log_ndtr((n_star - mu1) / sigma1))


def spade_beta_theory(
    n_total: float,
    scene: SourceScene,
    ct: CrosstalkMatrix,
    alpha: float,
    order: Order = Order.LEADING,
    n_star: float | None = None,
) -> float:
    """Gaussian-approximate SPADE type-II error; 0.0 (with a warning) on underflow."""
    return _finish(spade_log_beta_theory(n_total, scene, ct, alpha, order, n_star))


def spade_beta_no_crosstalk(n_total: int, scene: SourceScene) -> float:
    """Exact type-II error without crosstalk: no photon reaches the HG10 + HG01 bucket.

    Uses the leading-order bucket probability ``eps d_a^2 / 4``, i.e.
    ``(1 - eps d_a^2 / 4)^N``.
    """
    t = scene.epsilon * scene.d_a ** 2 / 4.0
    if not t < 1.0:
        raise DomainError(f"eps*d_a^2/4 = {t} must be below 1")
    if n_total == 0:
        return 1.0
    return _finish(n_total * math.log1p(-t))


def di_variance_threshold(n_total: float, alpha: float) -> float:
    """Critical value for the mean-square position estimate: ``1 + K sqrt(2/N)``."""
    return 1.0 + k_alpha(alpha) * math.sqrt(2.0 / n_total)


def di_log_beta_theory(n_total: float, scene: SourceScene, alpha: float) -> float:
    s = scene.epsilon * scene.d_a ** 2
    if not s < 1.0:
        raise DomainError(f"eps*d_a^2 = {s} must be below 1")
    arg = (math.sqrt(n_total) * s - k_alpha(alpha) * math.sqrt(2.0)) / (2.0 * (1.0 - s))
    # erfc(x)/2 == ndtr(-sqrt(2) x)
    return float(special.log_ndtr(-math.sqrt(2.0) * arg))


def di_beta_theory(n_total: float, scene: SourceScene, alpha: float) -> float:
    """Type-II error of the direct-imaging variance test.

    ``erfc((sqrt(N) eps d_a^2 - K sqrt(2)) / (2 (1 - eps d_a^2))) / 2``.
    """
    return _finish(di_log_beta_theory(n_total, scene, alpha))


def estimate_crosstalk(n_star: float, n_total: float, alpha: float) -> float:
    """Balanced crosstalk C solving ``N* = N C + K sqrt(N C (1 - C))`` on (0, 1/2).

    Returns 0.0 for ``N* <= 0`` (the degenerate lower edge). Raises NoRoot
    once ``N* >= N/2``.
    """
    if n_total <= 0:
        raise DomainError(f"n_total must be positive, got {n_total}")
    if n_star <= 0:
        return 0.0
    if n_star >= n_total / 2.0:
        raise NoRoot(f"N*={n_star} is not below N/2={n_total / 2}")
    k = k_alpha(alpha)

    def gap(c: float) -> float:
        return n_total * c + k * math.sqrt(n_total * c * (1.0 - c)) - n_star

    return float(optimize.brentq(gap, 0.0, 0.5, xtol=1e-15, rtol=4 * np.finfo(float).eps))
