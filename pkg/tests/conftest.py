"""Shared fixtures. Heavy preset-scale fixtures live in test_acceptance."""

import warnings

import pytest

from qubitamp.config import ScenarioConfig, get_preset, with_overrides
from qubitamp.integrate import PhysicalityWarning
from qubitamp.runner import ScenarioResult, run_scenario


def shrunken(name: str, n_samples: int, **overrides) -> ScenarioConfig:
    """Preset with t_total cut so exactly n_samples survive the transient."""
    cfg = get_preset(name)
    spacing = cfg.dt * cfg.sample_stride
    cfg = with_overrides(cfg, t_total=cfg.t_transient + (n_samples - 1) * spacing)
    return with_overrides(cfg, **overrides) if overrides else cfg


@pytest.fixture(scope="session")
def shrink():
    return shrunken


@pytest.fixture(scope="session")
def small_mixed_result() -> ScenarioResult:
    """Mixed preset at 4096 samples; shared by the app-layer tests."""
    return run_scenario(shrunken("mixed", 4096))


@pytest.fixture
def no_physicality_warnings():
    """Silence the expected warnings of noisy single realizations."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysicalityWarning)
        yield
