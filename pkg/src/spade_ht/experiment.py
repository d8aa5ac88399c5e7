"""End-to-end replication of the calibrate-then-test protocol over (eps, d_a) sweeps.

One H0 run (eps = 0) fixes the threshold as the empirical (1 - alpha)
percentile; the same threshold is then applied unchanged at every grid point.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .crosstalk import CrosstalkMatrix
from .errors import ConfigError, DomainError, NoRoot
from .scene import Alignment, Formulation, Hypothesis, SourceScene
from .simulate import (FixedWindowConfig, TrialBatch, simulate_fixed_n,
                       simulate_fixed_window)
from .testing import (calibrated_threshold, di_beta_theory, estimate_crosstalk,
                      rate_stderr, spade_beta_theory)

MODES = ("fixed_window", "fixed_n")
OVERLAYS = ("calibrated_threshold", "estimated_crosstalk", "gaussian_threshold")


@dataclass
class ProtocolConfig:
    n_photons: float = 1010.0
    c10: float = 0.01
    c01: float | None = None
    alpha: float = 0.05
    repetitions: int = 100
    calibration_repetitions: int | None = None
    mode: str = "fixed_window"
    eta: float = 1e-3
    planet_adds_light: bool = True
    d_a_fixed: list[float] = field(default_factory=lambda: [0.2, 0.33])
    epsilon_grid: list[float] = field(
        default_factory=lambda: [0.012, 0.024, 0.036, 0.048, 0.06, 0.072, 0.084, 0.096])
    epsilon_fixed: list[float] = field(default_factory=lambda: [0.028, 0.042])
    d_a_grid: list[float] = field(
        default_factory=lambda: [0.1, 0.15, 0.2, 0.25, 0.3, 0.33, 0.35])
    w0_um: float | None = None
    formulation: str = "star_fixed"
    alignment: str = "star"
    overlay: str = "calibrated_threshold"
    window_label: str = "10ms"
    seed: int = 0
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ProtocolConfig":
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
        def need(cond: bool, msg: str) -> None:
            if not cond:
                raise ConfigError(msg)

        need(isinstance(self.repetitions, int) and self.repetitions >= 1,
             f"repetitions: must be a positive integer, got {self.repetitions!r}")
        need(self.calibration_repetitions is None
             or (isinstance(self.calibration_repetitions, int)
                 and self.calibration_repetitions >= 1),
             "calibration_repetitions: must be a positive integer")
        need(self.n_photons >= 1, f"n_photons: must be >= 1, got {self.n_photons}")
        need(0.0 < self.alpha < 0.5, f"alpha: must lie in (0, 1/2), got {self.alpha}")
        need(self.mode in MODES, f"mode: must be one of {MODES}, got {self.mode!r}")
        need(self.overlay in OVERLAYS, f"overlay: must be one of {OVERLAYS}")
        need(isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64,
             "seed: must be a 64-bit unsigned integer")
        need(isinstance(self.workers, int) and self.workers >= 1, "workers: must be >= 1")
        need(self.w0_um is None or self.w0_um > 0, "w0_um: must be positive")
        try:
            Formulation(self.formulation)
            Alignment(self.alignment)
            self.crosstalk()
        except (ValueError, DomainError) as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("d_a_fixed", "epsilon_grid", "epsilon_fixed", "d_a_grid"):
            vals = getattr(self, name)
            need(isinstance(vals, list) and all(isinstance(v, (int, float)) for v in vals),
                 f"{name}: must be a list of numbers")
            need(all(v >= 0 for v in vals), f"{name}: values must be nonnegative")
        for eps in self.epsilon_grid + self.epsilon_fixed:
            need(eps < 0.5, f"epsilon {eps} must be below 0.5")
        if self.mode == "fixed_window":
            top = max(self.epsilon_grid + self.epsilon_fixed + [0.0])
            gain = 1.0 + top if self.planet_adds_light else 1.0
            need(0.0 < self.eta and self.eta * gain <= 1.0,
                 f"eta: per-window detection probability must stay in (0, 1], got {self.eta}")
        need(bool(self.grid()), "grid: no (epsilon, d_a) points configured")

    def crosstalk(self) -> CrosstalkMatrix:
        c01 = self.c10 if self.c01 is None else self.c01
        return CrosstalkMatrix.from_off_diagonal(self.c10, c01)

    def _norm(self, d: float) -> float:
        return d / self.w0_um if self.w0_um is not None else d

    def grid(self) -> list[tuple[float, float]]:
        """Unique (epsilon, d_a) points in sweep order, separations normalized once here."""
        pts: list[tuple[float, float]] = []
        for d in self.d_a_fixed:
            pts += [(float(e), self._norm(d)) for e in self.epsilon_grid]
        for e in self.epsilon_fixed:
            pts += [(float(e), self._norm(d)) for d in self.d_a_grid]
        seen: set[tuple[float, float]] = set()
        out = []
        for p in pts:
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out

    @property
    def n_calibration(self) -> int:
        return self.calibration_repetitions or self.repetitions


@dataclass
class GridResult:
    epsilon: float
    d_a: float
    beta_hat: float
    beta_stderr: float
    beta_theory: float
    beta_di_theory: float
    n_star: int
    alpha_hat: float
    n_mean: float


@dataclass
class ExperimentReport:
    config: ProtocolConfig
    n_star: int
    n_calibration_mean: float
    c_estimate: float
    alpha_hat: float
    alpha_stderr: float
    rows: list[GridResult]
    calibration: TrialBatch
    evaluation_h0: TrialBatch
    batches: list[TrialBatch]

    def summary(self) -> dict:
        return {
            "n_star": self.n_star,
            "n_calibration_mean": self.n_calibration_mean,
            "c_estimate": self.c_estimate,
            "alpha_hat": self.alpha_hat,
            "alpha_stderr": self.alpha_stderr,
            "grid_points": len(self.rows),
        }


def _scene(cfg: ProtocolConfig, eps: float, d_a: float) -> SourceScene:
    return SourceScene(eps, d_a, 0.0, Formulation(cfg.formulation), Alignment(cfg.alignment))


def _simulate_point(cfg: ProtocolConfig, scene: SourceScene, hyp: Hypothesis,
                    reps: int, stream: tuple[int, ...]) -> TrialBatch:
    ct = cfg.crosstalk()
    gain = 1.0 + scene.epsilon if cfg.planet_adds_light else 1.0
    if cfg.mode == "fixed_n":
        n_total = int(round(cfg.n_photons * gain))
        return simulate_fixed_n(n_total, scene, ct, hyp, reps, cfg.seed,
                                stream=stream, workers=cfg.workers)
    n_windows = int(round(cfg.n_photons / cfg.eta))
    window = FixedWindowConfig.from_eta(cfg.eta * gain, n_windows)
    return simulate_fixed_window(window, scene, ct, hyp, reps, cfg.seed,
                                 stream=stream, workers=cfg.workers)


def replicate_experiment(cfg: ProtocolConfig) -> ExperimentReport:
    """Calibrate on eps = 0, then estimate beta at every grid point with theory overlays.

    ``cfg.overlay`` selects the theory curve:

    * ``"calibrated_threshold"``: simulated crosstalk, with the calibrated
      integer threshold actually used by the test as N*;
    * ``"estimated_crosstalk"``: balanced crosstalk obtained by inverting the
      threshold formula at the calibrated threshold and the mean calibration
      photon number, as one would on measured data;
    * ``"gaussian_threshold"``: simulated crosstalk with the unrounded
      Gaussian threshold.
    """
    cfg.validate()
    null_scene = _scene(cfg, 0.0, 0.0)
    calibration = _simulate_point(cfg, null_scene, Hypothesis.H0, cfg.n_calibration, (0,))
    n_star = calibrated_threshold(calibration, cfg.alpha)
    n_cal = float(np.mean(calibration.counts_total))
    try:
        c_est = estimate_crosstalk(n_star, n_cal, cfg.alpha)
    except NoRoot:
        c_est = math.nan

    if cfg.overlay == "estimated_crosstalk" and 0.0 <= c_est <= 0.5:
        ct_theory = CrosstalkMatrix.from_off_diagonal(c_est, c_est)
    else:
        ct_theory = cfg.crosstalk()

    overlay_n_star = n_star if cfg.overlay == "calibrated_threshold" else None

    h0 = _simulate_point(cfg, null_scene, Hypothesis.H0, cfg.repetitions, (1,))
    alpha_hat = float(np.mean(h0.counts_n1 > n_star))
    alpha_se = rate_stderr(alpha_hat, cfg.repetitions)

    rows, batches = [], []
    for idx, (eps, d_a) in enumerate(cfg.grid()):
        scene = _scene(cfg, eps, d_a)
        batch = _simulate_point(cfg, scene, Hypothesis.H1, cfg.repetitions, (2, idx))
        beta_hat = float(np.mean(batch.counts_n1 <= n_star))
        n_mean = float(np.mean(batch.counts_total))
        rows.append(GridResult(
            epsilon=eps, d_a=d_a, beta_hat=beta_hat,
            beta_stderr=rate_stderr(beta_hat, cfg.repetitions),
            beta_theory=spade_beta_theory(n_mean, scene, ct_theory, cfg.alpha,
                                          n_star=overlay_n_star),
            beta_di_theory=di_beta_theory(n_mean, scene, cfg.alpha),
            n_star=n_star, alpha_hat=alpha_hat, n_mean=n_mean,
        ))
        batches.append(batch)
    return ExperimentReport(cfg, n_star, n_cal, c_est, alpha_hat, alpha_se, rows,
                            calibration, h0, batches)


def overlay_exceedances(report: ExperimentReport, n_sigma: float = 3.0) -> list[bool]:
    """Per grid point: does beta_hat sit more than ``n_sigma`` standard errors off theory?

    The standard error is the binomial one of a rate estimated from the
    configured repetitions, evaluated at the larger of the theory and the
    empirical rate's variances so a beta_hat of exactly 0 or 1 is not treated
    as noiseless.
    """
    reps = report.config.repetitions
    out = []
    for r in report.rows:
        se = max(rate_stderr(r.beta_theory, reps), rate_stderr(r.beta_hat, reps))
        out.append(abs(r.beta_hat - r.beta_theory) > n_sigma * se)
    return out
