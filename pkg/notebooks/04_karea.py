"""Exact Chern-character bookkeeping and the Clifford curvature bound.

Run: python3 notebooks/04_karea.py

Part one works on S^2 x S^2 with a character whose top component is all
that survives integration. The grid search finds the first multi-index k
where the pairing moves off r^m times the integral of omega, and the
interpolated polynomial has total degree at most m. Part two checks the
eigenvalue bound for the Clifford curvature term on random samples and
on the rank-one example where it is attained.
"""
from fractions import Fraction as Fr

import numpy as np

from collarflex import karea as ka

X = ka.truncated_polynomial_model(1, 1, "x")
Y = ka.truncated_polynomial_model(1, 1, "y")
M = ka.tensor_model(X, Y)
ch = ka.ChernCharacter(M, 2, (M.element({"x": 1, "y": -1}), M.element({"x.y": Fr(1, 2)})))
print("Chern-character numbers:", ka.chern_numbers(ch))
res = ka.nonvanishing_grid_search(M, M.one(), ch)
print("first k with P(k) != 0:", res.k, "P =", res.value, f"({res.evaluated} grid points)")
vals = ka.grid_values(M, M.one(), ch)
itp = ka.interpolate_grid(vals, M.m)
print("interpolated degree:", itp.degree, "reproduces grid:", itp.reproduces)
print("Newton coefficients:", {k: str(v) for k, v in itp.newton.items()})

a = ka.ChernCharacter(X, 1, (X.element({"x": 2}),))
b = ka.ChernCharacter(Y, 3, (Y.element({"y": Fr(1, 3)}),))
print("Kunneth:", a.integral(), "*", b.integral(), "=", ka.kunneth_product(a, b).integral())

print("\nClifford bound |eig K| <= n(n-1)/2 |R|")
print(ka.ke_suite(200, seed=1))
s = ka.CliffordSetup.sharp(0.5)
r = ka.ke_bound_check(s)
print(f"sharp sample: max |eig| {r.max_abs_eig:.15f}, bound {r.bound:.15f}")
t = 2 * 2 * 1 * r.norm_R
print("at scal = 2n(n-1)|R|:", ka.lichnerowicz_threshold(t, 2, r.norm_R),
      "min eig of scal/4 + K =", ka.lichnerowicz_min_eig(s, t))
rng = np.random.default_rng(0)
print("random n = 4 sample:", ka.ke_bound_check(ka.CliffordSetup.random(rng, 4, 2), rng))
