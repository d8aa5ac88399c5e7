"""Relative entropies (nats per detected photon) and SPADE figures of merit."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .crosstalk import CrosstalkMatrix, apply, identity
from .errors import DomainError, InfiniteDivergence, OutOfRegime
from .scene import (Hypothesis, Order, OutcomeDistribution, SourceScene,
                    second_moment, spade_probabilities)

# eps * d_a^2 must stay below this for the quantum / direct-imaging closed forms
SMALL_SOURCE_LIMIT = 0.1
# eps * d_a^2 must stay below this multiple of c10 for the crosstalk closed forms
CROSSTALK_REGIME_FACTOR = 1.0


def _signal(scene: SourceScene) -> float:
    return scene.epsilon * scene.d_a ** 2


def _check_small(scene: SourceScene) -> None:
    if _signal(scene) >= SMALL_SOURCE_LIMIT:
        raise OutOfRegime(
            f"eps*d_a^2 = {_signal(scene):.4g} is not small (limit {SMALL_SOURCE_LIMIT})")


def _check_crosstalk_regime(scene: SourceScene, ct: CrosstalkMatrix) -> None:
    if ct.c10 in (0.0, 1.0):
        raise DomainError(f"c10={ct.c10}: closed form needs 0 < c10 < 1")
    if _signal(scene) >= CROSSTALK_REGIME_FACTOR * ct.c10:
        raise OutOfRegime(
            f"eps*d_a^2 = {_signal(scene):.4g} is not below c10 = {ct.c10:.4g}")


def quantum_relative_entropy(scene: SourceScene) -> float:
    """Quantum relative entropy between the one- and two-source states, eps d_a^2 / 4."""
    _check_small(scene)
    return _signal(scene) / 4.0


def di_relative_entropy(scene: SourceScene) -> float:
    """Direct-imaging relative entropy, eps^2 d_a^4 / 4 (quartic in separation)."""
    _check_small(scene)
    return _signal(scene) ** 2 / 4.0


def bernoulli_relative_entropy(p: OutcomeDistribution, q: OutcomeDistribution) -> float:
    """KL divergence D(p || q) with the convention 0 ln(0/q) = 0."""
    total = 0.0
    for pi, qi in ((p.p0, q.p0), (p.p1, q.p1)):
        if pi == 0.0:
            continue
        if qi == 0.0:
            raise InfiniteDivergence(f"p={p.as_tuple()} has mass where q={q.as_tuple()} has none")
        total += pi * math.log(pi / qi)
    # round-off can leave a tiny negative value when p ~ q
    return max(total, 0.0)


def mixed_probabilities(
    scene: SourceScene,
    ct: CrosstalkMatrix,
    hypothesis: Hypothesis,
    order: Order = Order.LEADING,
) -> OutcomeDistribution:
    return apply(ct, spade_probabilities(scene, hypothesis, order))


def spade_relative_entropy_exact(
    scene: SourceScene,
    ct: CrosstalkMatrix | None = None,
    order: Order = Order.LEADING,
) -> float:
    """KL divergence between the crosstalk-mixed bucket distributions, no expansion."""
    ct = ct or identity()
    return bernoulli_relative_entropy(
        mixed_probabilities(scene, ct, Hypothesis.H0, order),
        mixed_probabilities(scene, ct, Hypothesis.H1, order),
    )


def _contrast(ct: CrosstalkMatrix) -> float:
    return (ct.c11 - ct.c10) ** 2


def spade_relative_entropy_approx(scene: SourceScene, ct: CrosstalkMatrix) -> float:
    """Small-signal SPADE relative entropy with crosstalk.

    ``eps^2 d_a^4 (c11 - c10)^2 / (32 c10 (1 - c10))``; requires eps d_a^2 < c10.
    """
    _check_crosstalk_regime(scene, ct)
    return _signal(scene) ** 2 * _contrast(ct) / (32.0 * ct.c10 * ct.c00)


def vacuum_corrected_spade_entropy(
    scene: SourceScene, ct: CrosstalkMatrix, eta: float,
) -> float:
    """SPADE relative entropy at a fixed integration window.

    ``eta`` is the probability of one detected photon per temporal mode. The
    vacuum outcome inflates the H0 count variance, replacing ``c00`` in the
    denominator by ``c00 + c10 (1 - eta)``.
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    _check_crosstalk_regime(scene, ct)
    return _signal(scene) ** 2 * _contrast(ct) / (
        32.0 * ct.c10 * (ct.c00 + ct.c10 * (1.0 - eta)))


def leading_order_entropy(scene: SourceScene, ct: CrosstalkMatrix | None = None) -> float:
    """First non-vanishing order of the SPADE relative entropy in the moment difference.

    Without crosstalk the entropy is linear in ``M2(H1) - M2(H0)``, namely
    ``(M2(H1) - M2(H0)) / 4``. With crosstalk it is quadratic:
    ``(c11 - c10)^2 (M2(H1) - M2(H0))^2 / (32 c10 (1 - c10))``.
    """
    dm2 = second_moment(scene, Hypothesis.H1) - second_moment(scene, Hypothesis.H0)
    if ct is None or ct.c10 == 0.0:
        return dm2 / 4.0
    if ct.c10 == 1.0:
        raise DomainError("c10=1 leaves no information in the bucket counts")
    return _contrast(ct) * dm2 ** 2 / (32.0 * ct.c10 * ct.c00)


def advantage_ratio(ct: CrosstalkMatrix) -> float:
    """Ratio of SPADE to direct-imaging exponents, ``(c11-c10)^2 / (8 c10 (1-c10))``."""
    if ct.c10 in (0.0, 1.0):
        raise DomainError(f"advantage ratio undefined at c10={ct.c10}")
    return _contrast(ct) / (8.0 * ct.c10 * ct.c00)


def crosstalk_threshold() -> float:
    """Balanced crosstalk at which SPADE and direct imaging have equal exponents."""
    return (3.0 - math.sqrt(6.0)) / 6.0


def photon_budget_ratio(ct: CrosstalkMatrix) -> float:
    """Fraction of the direct-imaging photon number SPADE needs for the same error exponent."""
    if ct.c11 == ct.c10:
        raise DomainError("c11 == c10: SPADE counts carry no information")
    return 8.0 * ct.c10 * ct.c00 / _contrast(ct)


@dataclass(frozen=True)
class EntropyReport:
    d_quantum: float
    d_direct_imaging: float
    d_spade_exact: float
    d_spade_approx: float
    advantage_ratio: float


def entropy_report(scene: SourceScene, ct: CrosstalkMatrix) -> EntropyReport:
    return EntropyReport(
        d_quantum=quantum_relative_entropy(scene),
        d_direct_imaging=di_relative_entropy(scene),
        d_spade_exact=spade_relative_entropy_exact(scene, ct),
        d_spade_approx=spade_relative_entropy_approx(scene, ct),
        advantage_ratio=advantage_ratio(ct),
    )
