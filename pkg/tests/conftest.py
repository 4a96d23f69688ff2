import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from torquescore.motion import MotionSequence, estimate_derivatives
from torquescore.rigidbody import builtin_model_path, load_model
from torquescore.synthetic import SYNTHETIC_MOTIONS, build_chain3, build_double_pendulum, build_pendulum

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def humanoid():
    return load_model(builtin_model_path("default_humanoid"))


@pytest.fixture(scope="session")
def pendulum():
    return build_pendulum()


@pytest.fixture(scope="session")
def double_pendulum():
    return build_double_pendulum()


@pytest.fixture(scope="session")
def chain3():
    return build_chain3()


@pytest.fixture(scope="session")
def synthetic_clips(humanoid):
    """name -> 100-frame 30 fps sequence with derivatives."""
    return {
        name: estimate_derivatives(MotionSequence(30.0, fn(humanoid), name))
        for name, fn in SYNTHETIC_MOTIONS.items()
    }


def random_state(model, rng, scale=(0.6, 1.5, 3.0)):
    """Random (q, qdot, qddot) away from gimbal lock."""
    N = model.N
    q = rng.uniform(-scale[0], scale[0], N)
    q[:3] = rng.normal(0, 0.3, 3)
    return q, rng.normal(0, scale[1], N), rng.normal(0, scale[2], N)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
