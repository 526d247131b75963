import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from twocrystal import build_coupling_table, dc_coefficients

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# Lines collected by test_acceptance.py, one per criterion check.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def coupling_tables(draw, max_modes=12, xi_min=1e-4, xi_max=1.5):
    """Random complex couplings with total strength in [xi_min, xi_max]."""
    m = draw(st.integers(1, max_modes))
    parts = draw(
        st.lists(
            st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=m, max_size=m
        ).filter(lambda v: sum(a * a + b * b for a, b in v) > 1e-6)
    )
    eta = np.array([complex(a, b) for a, b in parts])
    xi = draw(st.floats(xi_min, xi_max))
    eta *= xi / np.linalg.norm(eta)
    sel = draw(st.integers(0, m - 1))
    return build_coupling_table(eta, sel)


angles = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)


@pytest.fixture
def three_mode():
    """The worked three-mode crystal: eta = [0.1, 0.2i, -0.05], mode 0 selected."""
    return dc_coefficients(build_coupling_table([0.1, 0.2j, -0.05], 0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
