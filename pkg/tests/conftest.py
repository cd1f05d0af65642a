import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from beliefdesign.generators import random_scenario
from beliefdesign.model import validate_scenario

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

THIRD = 1.0 / 3.0


def scenario(states, joint, bias, **kw):
    if not isinstance(bias, dict):
        bias = {"table": list(bias)}
    return validate_scenario({"states": list(states), "joint": [list(r) for r in joint], "bias": bias}, **kw)


@pytest.fixture
def worked_example():
    return scenario([0, 10], [[0.4, 0.1], [0.1, 0.4]], {"affine": {"intercept": 3, "slope": THIRD}})


@pytest.fixture
def underconfident_2x2():
    return scenario([0, 1], [[0.3, 0.2], [0.2, 0.3]], {"affine": {"intercept": 0, "slope": 2}})


@st.composite
def scenarios(draw, min_size=2, max_size=5):
    n = draw(st.integers(min_size, max_size))
    m = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_scenario(np.random.default_rng(seed), n, m)


@st.composite
def binary_scenarios(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_scenario(np.random.default_rng(seed), 2, 2)


ACCEPTANCE_LINES = []


def record_acceptance(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
