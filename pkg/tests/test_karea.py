import json
from fractions import Fraction as Fr

import numpy as np
import pytest

from collarflex.collar import PreconditionError
from collarflex.karea import (
    ChernCharacter,
    CliffordSetup,
    CohomologyModel,
    ModelError,
    adams,
    adams_multi,
    chern_numbers,
    clifford_generators,
    curvature_endomorphism,
    grid_values,
    interpolate_grid,
    ke_bound_check,
    kunneth_product,
    lichnerowicz_min_eig,
    lichnerowicz_threshold,
    load_model,
    nonvanishing_grid_search,
    random_character,
    random_model,
    random_null,
    tensor_element,
    tensor_model,
    torus2_model,
    total_ch_nonzero,
    truncated_polynomial_model,
)


def s2xs2():
    return tensor_model(truncated_polynomial_model(1, 1, "x"), truncated_polynomial_model(1, 1, "y"))


def test_models_validate():
    for mdl in (s2xs2(), truncated_polynomial_model(3), torus2_model(2), tensor_model(torus2_model(), torus2_model(1, ("c", "d")))):
        mdl.validate()


def test_bad_multiplication_rejected():
    with pytest.raises(ModelError):
        CohomologyModel(["1", "a", "b", "ab"], [0, 1, 1, 2], {(1, 2): {3: 1}, (2, 1): {3: 1}}, [0, 0, 0, 1], 2)


def test_adams_examples():
    mdl = truncated_polynomial_model(2)
    ch = ChernCharacter(mdl, 2, (mdl.element({"x": 1}), mdl.element({"x^2": 1})))
    a3 = adams(ch, 3)
    assert a3.rank == 2
    assert a3.comps == (mdl.element({"x": 3}), mdl.element({"x^2": 9}))
    assert adams(ch, 1).comps == ch.comps
    assert all(not any(c) for c in adams(ch, 0).comps)


def test_adams_multi_hand_expansion():
    mdl = s2xs2()
    c1 = mdl.element({"x": 1, "y": 1})
    c2 = mdl.element({"x.y": Fr(1, 3)})
    ch = ChernCharacter(mdl, 1, (c1, c2))
    for k1 in range(3):
        for k2 in range(3):
            got = adams_multi(ch, (k1, k2))
            # (1 + k1 c1 + k1^2 c2)(1 + k2 c1 + k2^2 c2), with c1^2 = 2xy
            top = Fr(k1 * k1 + k2 * k2, 3) + 2 * k1 * k2
            assert got.comps[0] == mdl.element({"x": k1 + k2, "y": k1 + k2})
            assert got.comps[1] == mdl.element({"x.y": top})
    assert adams_multi(ch, (1, 1)).total() == mdl.mul(ch.total(), ch.total())


def test_grid_search_m1():
    mdl = truncated_polynomial_model(1, Fr(5, 2))
    ch = ChernCharacter(mdl, 3, (mdl.element({"x": 1}),))
    res = nonvanishing_grid_search(mdl, mdl.one(), ch)
    assert res.k == (1,) and res.value == Fr(5, 2)


def test_grid_search_m2_example():
    mdl = truncated_polynomial_model(2)
    ch = ChernCharacter(mdl, 1, (mdl.zero(), mdl.element({"x^2": 1})))
    assert chern_numbers(ch) == {(2,): 1, (1, 1): 0}
    res = nonvanishing_grid_search(mdl, mdl.one(), ch)
    assert res.k == (0, 1) and res.value == 1
    vals = grid_values(mdl, mdl.one(), ch)
    assert all(v == k[0] ** 2 + k[1] ** 2 for k, v in vals.items())
    itp = interpolate_grid(vals, 2)
    assert itp.degree == 2 and itp.reproduces


def test_inadmissible_message():
    mdl = truncated_polynomial_model(2)
    ch = ChernCharacter(mdl, 2, (mdl.zero(), mdl.zero()))
    with pytest.raises(PreconditionError, match="at least one nontrivial Chern number"):
        nonvanishing_grid_search(mdl, mdl.one(), ch)


def test_omega_must_start_with_one():
    mdl = truncated_polynomial_model(1)
    ch = ChernCharacter(mdl, 1, (mdl.element({"x": 1}),))
    with pytest.raises(PreconditionError):
        nonvanishing_grid_search(mdl, mdl.zero(), ch)


def test_total_ch_nonzero():
    mdl = truncated_polynomial_model(1, -2)
    ch = ChernCharacter(mdl, 1, (mdl.element({"x": 1}),))
    tc = total_ch_nonzero(mdl, ch)
    assert tc.k == (1,) and tc.integral == -2 and tc.sign == -1


def test_kunneth_examples():
    N, M = truncated_polynomial_model(1, 1), truncated_polynomial_model(1, 1, "y")
    a = ChernCharacter(N, 1, (N.element({"x": 2}),))
    b = ChernCharacter(M, 2, (M.element({"y": 3}),))
    p = kunneth_product(a, b)
    assert p.integral() == 6 and p.rank == 2
    z = ChernCharacter(M, 1, (M.zero(),))
    assert kunneth_product(a, z).integral() == 0


def test_kunneth_against_tensor_multiplication(rng):
    for _ in range(20):
        N, M = random_model(rng, int(rng.integers(1, 3))), random_model(rng, int(rng.integers(1, 3)))
        a, b = random_character(rng, N), random_character(rng, M)
        T = tensor_model(N, M)
        prod = T.mul(tensor_element(N, M, a.total(), M.one()), tensor_element(N, M, N.one(), b.total()))
        assert kunneth_product(a, b, T).total() == prod
        assert T.integrate(prod) == a.integral() * b.integral()


def test_random_null_interpolates_to_zero(rng):
    for _ in range(10):
        m = int(rng.integers(1, 4))
        ch = random_null(rng, m)
        assert not any(chern_numbers(ch).values())
        itp = interpolate_grid(grid_values(ch.model, ch.model.one(), ch), m)
        assert itp.degree == -1 and itp.reproduces


def test_json_roundtrip(tmp_path):
    mdl = s2xs2()
    ch = ChernCharacter(mdl, 2, (mdl.element({"x": Fr(1, 2)}), mdl.element({"x.y": -1})))
    d = mdl.to_json()
    d["ch"] = ch.to_json()
    d["omega"] = ["1", "0", "0", "1/3"]
    f = tmp_path / "m.json"
    f.write_text(json.dumps(d))
    m2, ch2, om = load_model(f)
    assert m2.to_json() == mdl.to_json()
    assert ch2.total() == ch.total()
    assert om[-1] == Fr(1, 3)


def test_clifford_relations():
    for n in (2, 4, 6):
        g = clifford_generators(n)
        eye = np.eye(2 ** (n // 2))
        for i in range(n):
            for j in range(n):
                assert np.allclose(g[i] @ g[j] + g[j] @ g[i], -2 * (i == j) * eye, atol=1e-12)
    with pytest.raises(ValueError):
        clifford_generators(3)


def test_zero_curvature():
    s = CliffordSetup(4, 2, np.zeros((4, 4, 2, 2)))
    assert not curvature_endomorphism(s).any()
    r = ke_bound_check(s)
    assert r.max_abs_eig == 0 and r.bound == 0 and r.passed
    assert lichnerowicz_threshold(1.0, 4, 0.0) == "definite"


def test_sharp_case():
    rho = 0.7
    s = CliffordSetup.sharp(rho)
    ev = np.linalg.eigvalsh(curvature_endomorphism(s))
    assert np.allclose(ev, [-rho, rho], atol=1e-14)
    r = ke_bound_check(s)
    assert abs(r.max_abs_eig - r.bound) <= 1e-12
    t = 2 * 2 * 1 * rho
    assert lichnerowicz_threshold(t, 2, r.norm_R) == "semidefinite"
    assert abs(lichnerowicz_min_eig(s, t)) <= 1e-10
    assert lichnerowicz_threshold(0.9 * t, 2, r.norm_R) == "inconclusive"
    assert lichnerowicz_min_eig(s, 0.9 * t) < 0


def test_random_hermitian(rng):
    s = CliffordSetup.random(rng, 4, 3)
    K = curvature_endomorphism(s)
    assert np.max(np.abs(K - K.conj().T)) <= 1e-12
    assert ke_bound_check(s, rng).passed


def test_setup_validation():
    R = np.zeros((2, 2, 1, 1), dtype=complex)
    R[0, 1] = 1.0  # Hermitian, not skew
    R[1, 0] = -1.0
    with pytest.raises(ValueError):
        CliffordSetup(2, 1, R)


def test_random_tensor_models_validate(rng):
    for _ in range(10):
        random_model(rng, int(rng.integers(1, 4))).validate()
