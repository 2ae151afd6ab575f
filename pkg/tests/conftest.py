import numpy as np
import pytest

from wfarima import ModelOrder, ParamVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def theta11():
    return ParamVector([0.2], [0.5], 0.3)


def random_stable_theta(rng, p, q, radius=1.5):
    """Parameter point whose AR and MA roots all have modulus >= radius."""

    def draw(deg):
        if deg == 0:
            return np.zeros(0)
        # real roots outside the disk, expanded into 1 - sum c_i z^i
        roots = rng.uniform(radius, 3 * radius, deg) * rng.choice([-1, 1], deg)
        poly = np.poly1d([1.0])
        for r in roots:
            poly = poly * np.poly1d([-1.0 / r, 1.0])
        c = poly.coeffs[::-1]  # ascending powers, c[0] = 1
        return -c[1:] / c[0]

    return ParamVector(draw(p), draw(q), rng.uniform(0.05, 0.45))


def order_of(p, q):
    return ModelOrder(p, q)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
