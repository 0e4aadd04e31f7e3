import numpy as np
import pytest

from fdjrc.propagation import (ScenarioConfig, TargetConfig, build_channels,
                               generate_scenario)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rand_psd(rng, n, rank=None):
    X = crandn(rng, n, rank or n)
    return X @ X.conj().T


def rand_herm(rng, n):
    X = crandn(rng, n, n)
    return 0.5 * (X + X.conj().T)


def small_channels(seed=0, n_bs=8, n_ms=4, M=6, N=4, targets=(TargetConfig(40.0, 30.0),),
                   ms_los_angle_deg=None):
    cfg = ScenarioConfig(n_bs=n_bs, n_ms=n_ms, targets=tuple(targets),
                         ms_los_angle_deg=ms_los_angle_deg)
    scen = generate_scenario(cfg, seed)
    return scen, build_channels(scen, M, N, 120e3, 8.92e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


TINY = {
    "experiment": ["se_vs_power", "sinr_vs_si", "radar_maps"],
    "system": {"n_bs": 8, "n_ms": 4, "n_rf": 2, "n_streams": 2, "M": 6, "N": 4},
    "design": {"bcd_iters": 4, "altmin_iters": 30, "altmin_escapes": 0},
    "sweep": {"power_dbm": [0.0, 20.0], "si_to_noise_db": [0.0, 60.0]},
    "radar": {"Mbar_factor": 4, "Nbar_factor": 8, "angle_grid_deg": [-40.0, 40.0, 40.0],
              "targets": [{"range_m": 30.0, "angle_deg": -20.0, "velocity_mps": 5.0},
                          {"range_m": 50.0, "angle_deg": 25.0}]},
    "trials": 2,
}


@pytest.fixture
def tiny_dict():
    import copy
    return copy.deepcopy(TINY)


@pytest.fixture
def tiny_config_path(tmp_path, tiny_dict):
    import json
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(tiny_dict))
    return p


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
