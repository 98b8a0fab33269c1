import math

import numpy as np
import pytest

from collarflex.collar import CollarMetric
from collarflex.geometry import RoundSphere
from collarflex.profiles import Poly, cos_sq, sin_sq


def cone(n, t_max=0.5):
    S = RoundSphere(n - 1)
    return CollarMetric(S, t_max, ((Poly((1.0, -2.0, 1.0)), S.unit()),))


def hemi(n, t_max=math.pi / 4):
    S = RoundSphere(n - 1)
    return CollarMetric(S, t_max, ((cos_sq(1.0, 0.0), S.unit()),))


def cap(n=3, r=math.pi / 3):
    S = RoundSphere(n - 1)
    return CollarMetric(S, r / 2, ((sin_sq(-1.0, r), S.unit()),))


def cylinder(n=3, scale=1.0, t_max=0.5):
    S = RoundSphere(n - 1)
    return CollarMetric(S, t_max, ((Poly((1.0,)), scale * S.unit()),))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(LINES):
            terminalreporter.write_line(LINES[k])
