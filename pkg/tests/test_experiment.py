import numpy as np
import pytest

from spade_ht.errors import ConfigError
from spade_ht.experiment import (ProtocolConfig, overlay_exceedances,
                                 replicate_experiment)

SMALL = dict(repetitions=50, d_a_fixed=[0.33], epsilon_grid=[0.02, 0.06],
             epsilon_fixed=[0.042], d_a_grid=[0.2, 0.33])


def test_defaults_are_valid():
    cfg = ProtocolConfig()
    cfg.validate()
    assert len(cfg.grid()) == 2 * 8 + 2 * 7
    assert cfg.n_calibration == 100


def test_grid_deduplicates_and_normalizes_once():
    cfg = ProtocolConfig(d_a_fixed=[33.0], epsilon_grid=[0.042], epsilon_fixed=[0.042],
                         d_a_grid=[33.0, 20.0], w0_um=100.0)
    assert cfg.grid() == [(0.042, 0.33), (0.042, 0.2)]


@pytest.mark.parametrize("bad", [
    {"repetitions": 0}, {"repetitions": 1.5}, {"alpha": 0.7}, {"mode": "burst"},
    {"overlay": "nope"}, {"seed": -1}, {"workers": 0}, {"c10": 1.5},
    {"epsilon_grid": [0.6]}, {"eta": 0.0}, {"eta": 0.99}, {"n_photons": 0},
    {"formulation": "planet_fixed"}, {"d_a_fixed": [], "epsilon_fixed": []},
])
def test_validation(bad):
    with pytest.raises(ConfigError):
        ProtocolConfig.from_dict(bad)


def test_unknown_field():
    with pytest.raises(ConfigError, match="reps"):
        ProtocolConfig.from_dict({"reps": 10})


def test_roundtrip_dict():
    cfg = ProtocolConfig(**SMALL)
    assert ProtocolConfig.from_dict(cfg.to_dict()) == cfg


def test_zero_crosstalk_always_detects():
    cfg = ProtocolConfig(c10=0.0, d_a_fixed=[0.6], epsilon_grid=[0.3, 0.4],
                         epsilon_fixed=[0.3], d_a_grid=[0.5, 0.6], repetitions=100)
    rep = replicate_experiment(cfg)
    assert rep.n_star == 0 and rep.c_estimate == 0.0
    assert all(r.beta_hat == 0.0 for r in rep.rows)
    assert rep.alpha_hat == 0.0


def test_threshold_shared_across_grid():
    rep = replicate_experiment(ProtocolConfig(**SMALL))
    assert {r.n_star for r in rep.rows} == {rep.n_star}
    assert rep.n_calibration_mean == pytest.approx(1010, rel=0.01)
    assert rep.c_estimate == pytest.approx(0.01, rel=0.3)


@pytest.mark.parametrize("mode", ["fixed_window", "fixed_n"])
def test_deterministic_across_workers(mode):
    a = replicate_experiment(ProtocolConfig(mode=mode, **SMALL))
    b = replicate_experiment(ProtocolConfig(mode=mode, workers=3, **SMALL))
    assert [vars(r) for r in a.rows] == [vars(r) for r in b.rows]
    assert a.calibration == b.calibration


def test_planet_light_raises_photon_number():
    rep = replicate_experiment(ProtocolConfig(**SMALL))
    top = max(rep.rows, key=lambda r: r.epsilon)
    assert top.n_mean == pytest.approx(1010 * (1 + top.epsilon), rel=0.01)
    flat = replicate_experiment(ProtocolConfig(planet_adds_light=False, **SMALL))
    assert max(r.n_mean for r in flat.rows) == pytest.approx(1010, rel=0.01)


@pytest.mark.parametrize("overlay", ["calibrated_threshold", "estimated_crosstalk",
                                     "gaussian_threshold"])
def test_overlays(overlay):
    rep = replicate_experiment(ProtocolConfig(overlay=overlay, **SMALL))
    assert all(0.0 <= r.beta_theory <= 1.0 for r in rep.rows)
    assert len(overlay_exceedances(rep)) == len(rep.rows)


def test_di_overlay_above_spade():
    rep = replicate_experiment(ProtocolConfig())
    for r in rep.rows:
        assert r.beta_theory < r.beta_di_theory
        assert r.beta_hat <= r.beta_di_theory + 3 * max(r.beta_stderr, 0.022)


def test_summary_keys():
    s = replicate_experiment(ProtocolConfig(**SMALL)).summary()
    assert set(s) == {"n_star", "n_calibration_mean", "c_estimate", "alpha_hat",
                      "alpha_stderr", "grid_points"}
