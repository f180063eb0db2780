import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from aaflow.algebra import BalancedParams, kahler_check, sym_norm_sq
from aaflow.exterior import DIM, KForm
from aaflow.hull_strominger import INSTANTON_RESOLUTION

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

coefficient = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)

params = st.builds(BalancedParams, coefficient, coefficient, coefficient, coefficient, coefficient, coefficient)

kahler_params = st.builds(
    lambda a23, a24, a25: BalancedParams(0.0, a23, a24, a25, -a23, a24), coefficient, coefficient, coefficient
)

taus = st.one_of(st.sampled_from([-1.0, 0.0, 1.0]), st.floats(-3.0, 3.0, allow_nan=False))


@st.composite
def forms(draw, degree=None):
    k = draw(st.integers(0, DIM)) if degree is None else degree
    coeffs = draw(st.lists(coefficient, min_size=math.comb(DIM, k), max_size=math.comb(DIM, k)))
    return KForm(k, np.array(coeffs))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


A22 = BalancedParams(A22=1.0)


def resolvable(p: BalancedParams) -> bool:
    """Kähler, or far enough from Kähler for curvature residuals to exceed rounding."""
    return kahler_check(p) or sym_norm_sq(p) > INSTANTON_RESOLUTION * float(np.max(np.abs(p.as_vector()))) ** 2


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
