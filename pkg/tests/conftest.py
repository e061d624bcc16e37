import numpy as np
import pytest

from ellipsum import ellipsoid_sum, make_ellipsoid

FOUR_SHAPES = [
    [[0.41, 0.33], [0.33, 0.31]],
    [[0.23, 0.11], [0.11, 0.06]],
    [[0.17, -0.1], [-0.1, 0.15]],
    [[0.01, 0.0], [0.0, 0.65]],
]
STABLE_F = [
    [0.67, 0.35, -0.12],
    [-0.66, -0.55, 0.41],
    [2.12, 1.83, 0.47],
]
HAND_Q0 = [[-0.1193, -0.0412], [-0.0412, -0.1521]]

_ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_pd(rng, n, scale=None):
    A = rng.standard_normal((n, n))
    s = rng.uniform(0.2, 2.0) if scale is None else scale
    return s * (A @ A.T + 0.1 * np.eye(n))


def random_sum(rng, k, n):
    return ellipsoid_sum([make_ellipsoid(random_pd(rng, n)) for _ in range(k)])


def random_stable(rng, n, radius=0.9):
    A = rng.standard_normal((n, n))
    return A * (radius / max(abs(np.linalg.eigvals(A))))


@pytest.fixture
def four_sum():
    return ellipsoid_sum([make_ellipsoid(q) for q in FOUR_SHAPES])


@pytest.fixture
def two_disks():
    return ellipsoid_sum([make_ellipsoid(np.eye(2)), make_ellipsoid(np.eye(2))])
