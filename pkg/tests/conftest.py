import numpy as np
import pytest

from mfris_ee.application.use_cases.experiment_use_cases import build_scenario
from mfris_ee.simulation_config import load_settings


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def settings(tmp_path):
    """Desk profile isolated from the caller's environment, writing under tmp_path"""
    return load_settings(
        None,
        profile="desk",
        overrides={"harness": {"output_dir": str(tmp_path / "results"), "seeds": 2}},
        environ={},
    )


@pytest.fixture
def tiny_settings(settings):
    return settings.updated("system", N=3, M=4, K_r=1, K_t=1)


@pytest.fixture
def tiny_scenario(tiny_settings):
    """N=3, M=4, one user per half-space, perfect CSI"""
    return build_scenario(tiny_settings, "MF-RIS", "perfect", seed=7)


@pytest.fixture
def statistical_scenario(tiny_settings):
    return build_scenario(tiny_settings, "MF-RIS", "statistical", seed=7)


@pytest.fixture
def bounded_scenario(tiny_settings):
    return build_scenario(tiny_settings, "MF-RIS", "bounded", seed=7)
