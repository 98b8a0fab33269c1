import math

import numpy as np
import pytest

from collarflex import geometry as geo
from collarflex.collar import (
    CollarMetric,
    PreconditionError,
    c1_drift,
    check_boundary_condition,
    collar_scalar,
    curvature_batch,
    mean_curvature,
    scal_lower_bound,
    second_fundamental_form,
    trace_against,
    trace_comparison_arrays,
    trace_comparison_check,
    weingarten,
)
from collarflex.deformations import make_c_normal
from collarflex.geometry import FlatTorus, GeometryError, RoundSphere, SymTensorField
from collarflex.profiles import Poly, Trig

from conftest import cap, cone, cylinder, hemi

TS = np.linspace(0.0, 0.45, 10)


def test_second_fundamental_form_examples():
    assert second_fundamental_form(cylinder(), 0.3).is_zero()
    assert second_fundamental_form(cone(3), 0.0).scale == pytest.approx(1.0, abs=1e-15)
    assert abs(second_fundamental_form(hemi(3), 0.0).scale) < 1e-15


@pytest.mark.parametrize("t", [0.0, 0.2, 0.4])
def test_weingarten_closed_forms(t):
    assert np.allclose(weingarten(cylinder(), t), 0.0)
    assert weingarten(cone(3), t)[0, 0, 0] == pytest.approx(1 / (1 - t), rel=1e-13)
    assert weingarten(hemi(3), t)[0, 0, 0] == pytest.approx(math.tan(t), rel=1e-13, abs=1e-15)


def test_mean_curvature_examples():
    assert mean_curvature(cap(), 0.0)[0] == pytest.approx(1 / math.tan(math.pi / 3), abs=1e-14)
    assert mean_curvature(cylinder(), 0.1)[0] == 0.0
    assert mean_curvature(cone(3), 0.0)[0] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_flat_cone_is_flat(n):
    s = curvature_batch(cone(n), TS)["scal"]
    assert np.max(np.abs(s)) <= 1e-9


@pytest.mark.parametrize("n", [3, 4, 5])
def test_hemisphere_scal(n):
    s = curvature_batch(hemi(n), np.linspace(0, 0.78, 20))["scal"]
    assert np.max(np.abs(s - n * (n - 1))) <= 1e-9


def test_cylinder_scal_and_lower_bound():
    assert collar_scalar(cylinder(3), 0.2)[0] == pytest.approx(2.0, abs=1e-14)
    assert scal_lower_bound(cylinder(3), 0.2)[0] == collar_scalar(cylinder(3), 0.2)[0]
    assert scal_lower_bound(hemi(3), 0.0)[0] == pytest.approx(6.0, abs=1e-12)
    # cone at t = 0: 2 - 4 - 4
    assert scal_lower_bound(cone(3), 0.0)[0] == pytest.approx(-6.0, abs=1e-12)


def test_t_out_of_range():
    with pytest.raises(ValueError):
        collar_scalar(cone(3), 0.5)
    with pytest.raises(ValueError):
        mean_curvature(cone(3), -0.1)


def _random_isotropic_collar(rng, n):
    S = RoundSphere(n - 1)
    c = rng.uniform(-0.3, 0.3, 4)
    p = Poly((1.0, *c)) + Trig("sin", float(rng.uniform(0.5, 2)), 0.0) * float(rng.uniform(-0.2, 0.2))
    return CollarMetric(S, 0.4, ((p, S.unit()),))


def _random_torus_collar(rng, res=8):
    T = FlatTorus(2, (2 * math.pi, 2 * math.pi), res)
    x, y = T.coords()
    base = np.zeros((T.nodes, 2, 2))
    base[:, 0, 0] = 1.5 + 0.2 * np.sin(x)
    base[:, 1, 1] = 1.5 + 0.2 * np.cos(y)
    base[:, 0, 1] = base[:, 1, 0] = 0.1 * np.sin(x + y)
    A = rng.normal(size=(2, 2)) * 0.2
    B = SymTensorField.grid(np.broadcast_to(A + A.T, (T.nodes, 2, 2)))
    return CollarMetric(T, 0.3, ((Poly((1.0,)), SymTensorField.grid(base)), (Poly((0.0, 1.0, 0.5)), B)))


def test_lower_bound_below_scal_randomized(rng):
    worst = -np.inf
    for i in range(1000):
        cm = _random_isotropic_collar(rng, int(rng.integers(2, 7))) if i % 10 else _random_torus_collar(rng)
        cb = curvature_batch(cm, np.linspace(0, 0.29, 5))
        worst = max(worst, float(np.max(cb["lower"] - cb["scal"])))
    assert worst <= 1e-10


def test_weingarten_identities_randomized(rng):
    for _ in range(20):
        cm = _random_torus_collar(rng)
        cb = curvature_batch(cm, np.linspace(0, 0.29, 4))
        assert np.max(np.abs(np.trace(cb["W"], axis1=-2, axis2=-1) / 2 - cb["H"])) <= 1e-10
        assert np.max(np.abs(cb["G"] @ cb["W"] - cb["II"])) <= 1e-10


def test_trace_against_examples(rng):
    g = SymTensorField.isotropic(2.0)
    assert trace_against(g, g, 3)[0] == pytest.approx(3.0)
    assert trace_against(g, SymTensorField.isotropic(5.0), 3)[0] == pytest.approx(3 * 5 / 2)
    A = rng.normal(size=(3, 3))
    G = A @ A.T + 3 * np.eye(3)
    H = rng.normal(size=(3, 3))
    H = H + H.T
    L = np.linalg.cholesky(G)
    Li = np.linalg.inv(L)
    want = np.sum(np.linalg.eigvalsh(Li @ H @ Li.T))
    got = trace_against(SymTensorField.grid(G[None]), SymTensorField.grid(H[None]))[0]
    assert got == pytest.approx(want, rel=1e-12)


def test_trace_comparison_examples():
    g0 = SymTensorField.isotropic(1.0)
    h = SymTensorField.isotropic(0.7)
    lhs, rhs, ok = trace_comparison_check(g0, g0, h, 1)
    assert ok and lhs[0] == 0.0
    lhs, rhs, ok = trace_comparison_check(g0, 1.5 * g0, h, 1)
    assert ok
    assert lhs[0] == pytest.approx(0.7 / 3) and rhs[0] == pytest.approx(0.7)
    with pytest.raises(PreconditionError):
        trace_comparison_check(g0, 2.0 * g0, h, 1)


def test_trace_comparison_randomized_batch(rng):
    for k in range(1, 6):
        A = rng.normal(size=(2000, k, k))
        g0 = A @ np.swapaxes(A, 1, 2) + 0.5 * np.eye(k)
        D = rng.normal(size=(2000, k, k))
        D = D + np.swapaxes(D, 1, 2)
        nrm = geo.g_norm(g0, D, 1)
        D *= (rng.uniform(0, 0.5, 2000) / nrm)[:, None, None]
        h = rng.normal(size=(2000, k, k))
        h = h + np.swapaxes(h, 1, 2)
        _, _, ok = trace_comparison_arrays(g0, g0 + D, h)
        assert ok.all()


def test_symtensor_symmetry_rules():
    with pytest.raises(GeometryError):
        SymTensorField.grid(np.array([[[1.0, 1e-6], [0.0, 1.0]]]))
    f = SymTensorField.grid(np.array([[[1.0, 1e-11], [0.0, 1.0]]]))
    assert f.values[0, 0, 1] == f.values[0, 1, 0]
    with pytest.raises(GeometryError):
        SymTensorField.isotropic(1.0) + SymTensorField.grid(np.eye(1)[None])


def test_torus_resolution_and_dimension_rules():
    with pytest.raises(GeometryError):
        FlatTorus(2, (1.0, 1.0), 4)
    with pytest.raises(GeometryError):
        RoundSphere(0)


def _conformal_torus(res):
    T = FlatTorus(2, (2 * math.pi, 2 * math.pi), res)
    x, y = T.coords()
    u = 0.3 * np.sin(x) * np.cos(2 * y)
    G = np.exp(2 * u)[:, None, None] * np.eye(2)
    lap = -0.3 * np.sin(x) * np.cos(2 * y) - 4 * 0.3 * np.sin(x) * np.cos(2 * y)
    scal_G = -2 * np.exp(-2 * u) * lap
    cm = CollarMetric(T, 0.5, ((Poly((1.0, 2.0, 1.0)), SymTensorField.grid(G)),))
    return cm, scal_G


def test_torus_backend_second_order():
    errs = []
    for res in (32, 64, 128):
        cm, scal_G = _conformal_torus(res)
        t = np.array([0.0, 0.25])
        exact = (scal_G[None, :] - 2) / (1 + t[:, None]) ** 2
        errs.append(np.max(np.abs(curvature_batch(cm, t)["scal"] - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9), orders


def test_torus_flat_matches_round_free_formula():
    T = FlatTorus(2, (1.0, 1.0), 8)
    cm = CollarMetric(T, 0.5, ((Poly((1.0, -2.0, 1.0)), T.unit()),))
    # flat slices (1 - t)^2 delta: 0 + 3*2/(1-t)^2 - 4/(1-t)^2 - 4/(1-t)^2
    t = np.array([0.0, 0.3])
    assert np.allclose(curvature_batch(cm, t)["scal"], (-2 / (1 - t) ** 2)[:, None], atol=1e-12)


def test_boundary_condition_examples():
    assert check_boundary_condition(cylinder(), "doubling").passed
    r = check_boundary_condition(cone(3), "doubling")
    assert not r.passed and r.residual == pytest.approx(2.0 * math.sqrt(2))  # |-2 g0| in a 2-dim frame
    c = check_boundary_condition(cap(), "H>=", h0=0.0)
    assert c.passed and c.margin == pytest.approx(1 / math.tan(math.pi / 3))
    assert check_boundary_condition(cone(3), "II=h0", h0=1.0).passed
    assert check_boundary_condition(cone(3), "cone", h0=1.0, radius=0.4).passed
    assert check_boundary_condition(cap(), "II>=k", k=SymTensorField.isotropic(0.0)).passed
    assert not check_boundary_condition(cap(), "II>=k", k=SymTensorField.isotropic(1.0)).passed
    with pytest.raises(ValueError):
        check_boundary_condition(cap(), "nonsense")


@pytest.mark.parametrize("C", [-1.0, 0.0, 1.0, 10.0])
def test_c_normal_predicate_accepts_constructed(C):
    S = RoundSphere(2)
    cm = make_c_normal(S.unit() * 0.75, S.unit() * 0.3, C, 0.2, S)
    assert check_boundary_condition(cm, "c-normal", C=C, radius=0.19).passed
    assert not check_boundary_condition(cm, "c-normal", C=C + 0.5).passed
    assert not check_boundary_condition(cap(), "c-normal", C=C).passed


def test_make_c_normal_positivity_error():
    S = RoundSphere(2)
    with pytest.raises(PreconditionError, match="shrink t_max"):
        make_c_normal(S.unit(), S.unit() * 0.0, 10.0, 1.0, S)


def test_c1_drift_examples():
    a = cap()
    assert c1_drift(a, a) == 0.0
    S = a.geometry
    widths = []
    for w in (0.2, 0.1):
        from collarflex.profiles import Rescaled
        from collarflex.cutoffs import plateau

        bump = Poly((0.0, 0.0, 1.0)) * Rescaled(plateau(), w)
        widths.append(c1_drift(a, a.plus(((bump, S.unit() * 0.1),))))
    assert widths[1] < widths[0]
    with pytest.raises(PreconditionError):
        c1_drift(a, cone(3))
