from fractions import Fraction as Fr
from math import sqrt

import numpy as np
import pytest

from collarflex.cutoffs import (
    S1,
    S2,
    c0_constant,
    check_chi_family,
    chi_csv,
    chi_delta,
    phi1,
    phi1_exact,
    phi_tilde,
    phi_tilde_exact,
    psi1,
)

DELTAS = [0.5, 0.25, 1 / 16, 1 / 64]


def test_phi_tilde_junction_exact():
    f = phi_tilde_exact()
    a = Fr(1, 10)
    assert [f(a, d) for d in range(3)] == [Fr(-2, 5), Fr(1), Fr(0)]
    # the middle polynomial alone, evaluated at the junction
    mid = lambda t: Fr(1, 10240) * (10 * t + 7) * (10 * t - 9) ** 3
    assert mid(a) == Fr(-2, 5)
    b = Fr(9, 10)
    assert [f(b, d) for d in range(3)] == [0, 0, 0]


def test_phi_tilde_junction_continuity():
    for x in (0.1, 0.9):
        for d in range(3):
            assert abs(phi_tilde(x - 1e-13, d) - phi_tilde(x + 1e-13, d)) <= 1e-12


def test_phi_tilde_second_derivative_minimum():
    t = np.linspace(0.1, 0.9, 8001)
    dd = phi_tilde(t, 2)
    assert dd.min() == pytest.approx(-15 / 8, abs=1e-12)
    assert t[np.argmin(dd)] == pytest.approx(0.5, abs=1e-12)
    assert phi_tilde_exact()(Fr(1, 2), 2) == Fr(-15, 8)


def test_phi1_examples():
    p = phi1()
    j0 = p.jet(np.array([0.0, 1.0]), 2)
    assert j0[0][0] == -0.5 and j0[1][0] == 1.0
    assert j0[0][1] == 0.0 and j0[1][1] == 0.0
    t = np.linspace(0, 1.2, 10_000)
    j = p.jet(t, 2)
    assert j[2].max() <= 1e-12
    assert j[2].min() >= -2 and j[1].min() >= 0 and j[1].max() <= 1
    assert j[0].min() >= -0.5 and j[0].max() <= 0


def test_phi1_close_to_phi_tilde_in_c2():
    t = np.linspace(0, 1, 4001)
    j = phi1().jet(t, 2)
    err = max(np.max(np.abs(j[d] - phi_tilde(t, d))) for d in range(3))
    assert err <= 1 / 8
    # equal near 0 and past 19/20, exactly
    f, g = phi1_exact(), phi_tilde_exact()
    for x in (Fr(0), Fr(1, 20), Fr(19, 20), Fr(1)):
        assert all(f(x, d) == g(x, d) for d in range(3))


def test_psi1_plateau_and_support():
    j = psi1().jet(np.array([0.0, 0.9, 1.0, 2.0]), 1)
    assert list(j[0]) == [0.5, 0.5, 0.0, 0.0]


@pytest.mark.parametrize("delta", DELTAS)
def test_chi_family_bounds(delta):
    res = check_chi_family(delta)
    bad = {k: v for k, v in res.items() if not v[0]}
    assert not bad


@pytest.mark.parametrize("delta", DELTAS)
def test_chi_examples(delta):
    fam = chi_delta(delta)
    j = fam.chi.jet(np.array([0.0, sqrt(delta), 2.0]), 1)
    assert j[0][0] == 0.0 and j[1][0] == 1.0
    assert j[0][1] == 0.0 and j[0][2] == 0.0


def test_chi_max_sixteenth():
    t = np.linspace(0, 0.25, 10_000)
    assert chi_delta(1 / 16).chi(t).max() <= 1 / 32


def test_c0_independent_of_delta():
    vals = {chi_delta(d).c0 for d in DELTAS}
    assert vals == {c0_constant()}


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.51])
def test_chi_delta_range(delta):
    with pytest.raises(ValueError):
        chi_delta(delta)


def test_schedules():
    assert S1(0) == 1 and S1(1) == 0 and S1(0.75) == 0.5
    assert S2(0) == 1 and S2(0.5) == 0 and S2(1) == 0
    assert np.allclose(S1(np.array([0.25, 0.5])), [1, 1])


def test_chi_csv():
    txt = chi_csv(0.25, points=11)
    lines = txt.splitlines()
    assert lines[0] == "t,chi,chi_dot,chi_ddot"
    assert len(lines) == 12
    assert float(lines[1].split(",")[2]) == 1.0
