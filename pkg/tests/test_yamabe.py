import math

import numpy as np
import pytest

from collarflex.collar import PreconditionError
from collarflex.yamabe import (
    annulus,
    assemble,
    conformal_change,
    first_eigenpair,
    flat_ball,
    flatball_oracle,
    parse_profile,
    product,
    profile_csv,
    rayleigh,
    solve,
    spherical_cap,
)


def test_oracle_root():
    lam = flatball_oracle(3)
    k = math.sqrt(lam / 8)
    assert math.tan(k) == pytest.approx(2 * k, rel=1e-12)
    assert k == pytest.approx(1.16556, abs=1e-5)


def test_flat_ball_eigenvalue_close_to_oracle():
    p = assemble(flat_ball(), 3, 512)
    pair = first_eigenpair(p)
    assert abs(pair.lam - flatball_oracle()) <= 1e-2
    assert pair.residual <= 1e-8


def test_second_order_convergence():
    lams = [first_eigenpair(assemble(flat_ball(), 3, N)).lam for N in (128, 256, 512, 1024)]
    d = np.diff(lams)
    assert np.all(np.abs(d[:-1] / d[1:]) >= 3.5)


def test_constant_phi_rayleigh():
    p = assemble(flat_ball(), 3, 256)
    assert rayleigh(p, np.ones_like(p.r)) == pytest.approx(12.0, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4])
def test_product_case_constant(n):
    p = assemble(product(1.0, 1.0), n, 512)
    pair = first_eigenpair(p)
    s0 = (n - 1) * (n - 2)
    assert abs(pair.lam - s0) <= 1e-8
    assert np.ptp(pair.phi) / pair.phi.max() <= 1e-8


@pytest.mark.parametrize("text", ["flatball", "cap:1.0", "cap:2.5", "annulus:0.5,1", "product:1,2"])
def test_catalog_profiles(text):
    p = assemble(parse_profile(text), 3, 512)
    pair = first_eigenpair(p)
    assert np.all(pair.phi > 0)
    assert pair.lam > 0
    assert rayleigh(p, pair.phi) == pytest.approx(pair.lam, rel=1e-9)
    assert float(pair.phi @ (p.mass * pair.phi)) == pytest.approx(1.0, rel=1e-12)


def test_operator_symmetric():
    p = assemble(annulus(0.3, 1.0), 4, 256)
    assert p.symmetry_residual() <= 1e-12


def test_conformal_flat_ball_small_grid():
    out, p, pair, rep = solve(flat_ball(), 3, 512)
    assert rep.positive and abs(rep.H_hat) <= 1e-5
    assert out["phi_positive"]


def test_conformal_scaling():
    p = assemble(spherical_cap(1.0), 3, 512)
    pair = first_eigenpair(p)
    a = conformal_change(p, pair.phi, pair.lam)
    b = conformal_change(p, 2 * pair.phi, pair.lam)
    assert a.scale_exponent == 4.0
    assert np.allclose(b.scal_hat, a.scal_hat * 2.0**-4, rtol=1e-9)
    assert abs(b.H_hat) == pytest.approx(abs(a.H_hat) / 4, abs=1e-12)


def test_cap_boundary_mean_curvature():
    prof = spherical_cap(1.0)
    assert prof.H_outer() == pytest.approx(1 / math.tan(1.0), rel=1e-14)


def test_identity_factor_on_eigen_metric():
    # constants solve the product problem, so phi = 1 gives g_hat = g
    p = assemble(product(1.0, 1.0), 3, 256)
    rep = conformal_change(p, np.ones_like(p.r), 2.0)
    assert rep.rel_error <= 1e-9 and rep.H_hat == 0.0


def test_errors():
    with pytest.raises(PreconditionError):
        assemble(flat_ball(), 2, 256)
    with pytest.raises(PreconditionError):
        assemble(flat_ball(), 3, 32)
    p = assemble(flat_ball(), 3, 64)
    with pytest.raises(PreconditionError):
        conformal_change(p, -np.ones_like(p.r), 1.0)
    with pytest.raises(ValueError):
        parse_profile("torus")
    with pytest.raises(PreconditionError):
        annulus(1.0, 0.5)


def test_csv_columns():
    out, p, pair, rep = solve(flat_ball(), 3, 64)
    lines = profile_csv(p, pair, rep).splitlines()
    assert lines[0] == "r,phi,scal_hat" and len(lines) == len(p.r) + 1
