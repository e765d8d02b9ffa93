import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.large_base_example, HealthCheck.filter_too_much])
settings.load_profile("default")

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


@st.composite
def moebius_matrices(draw):
    while True:
        m = np.array([[draw(complexes), draw(complexes)], [draw(complexes), draw(complexes)]])
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) > 0.1 and np.linalg.cond(m) < 1e3:
            return m


@pytest.fixture(scope="session")
def g237():
    from riccati_foliations.groups import triangle_group

    return triangle_group(2, 3, 7)


@pytest.fixture(scope="session")
def d237(g237):
    from riccati_foliations.suspension import from_group

    return from_group(g237)


@pytest.fixture(scope="session")
def l237_9(g237):
    from riccati_foliations.limitset import enumerate_limit_points

    return enumerate_limit_points(g237, 9)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
