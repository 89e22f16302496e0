import numpy as np
import pytest

from roadwarn.photometry import AmbientModel, RoadGeometry, Trace, VehicleSpec
from roadwarn.scenario import ScenarioSpec

QUIET = AmbientModel(base_night_lux=0.05, multiplicative_noise_sigma=0.0)


def two_channel(lux_a, lux_b=None, rate=20.0, t0=0.0):
    """Interleaved trace from per-channel lux arrays sampled at ``rate``."""
    lux_a = np.asarray(lux_a, dtype=float)
    lux_b = np.full_like(lux_a, 0.05) if lux_b is None else np.asarray(lux_b, dtype=float)
    n = len(lux_a)
    t = t0 + np.arange(n) / rate
    lux = np.empty(2 * n)
    lux[0::2], lux[1::2] = lux_a, lux_b
    return Trace(np.repeat(t, 2), np.tile(np.array([0, 1], dtype=np.int8), n), lux)


def sedan_scenario(ambient=QUIET, seed=5, **vehicle):
    fields = dict(entry_time=5.0, entry_distance=1500.0)
    fields.update(vehicle)
    v = VehicleSpec.of_class(fields.pop("vehicle_class", "sedan_led"), **fields)
    return ScenarioSpec(RoadGeometry(), ambient, (v,), v.passby_time + 10.0, seed, "sedan")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
