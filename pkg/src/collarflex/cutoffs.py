"""Cutoff profiles: phi-tilde, its smoothing phi1, psi1, chi_delta, S1/S2.

Everything is built once in exact rational arithmetic and then frozen
into float piecewise polynomials.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction as Fr
from functools import lru_cache
from math import sqrt

import numpy as np

from ._rational import (
    RationalPiecewise,
    pcompose_affine,
    pmul,
    ppow,
    pscale,
    padd,
    pder,
    smoothstep7,
)
from .profiles import Piecewise, Poly, Product, Profile, Rescaled, Sum

SMOOTHING_WIDTH = Fr(1, 60)  # three box passes, total spread 1/40 on each side


@lru_cache(maxsize=None)
def phi_tilde_exact() -> RationalPiecewise:
    mid = pscale(pmul((Fr(7), Fr(10)), ppow((Fr(-9), Fr(10)), 3)), Fr(1, 10240))
    return RationalPiecewise([Fr(1, 10), Fr(9, 10)], [(Fr(-1, 2), Fr(1)), mid, (Fr(0),)])


def phi_tilde(t, d: int = 0):
    """phi-tilde and its derivatives (exact rational evaluation per point)."""
    f = phi_tilde_exact()
    ts = np.atleast_1d(np.asarray(t, dtype=object))
    out = np.array([float(f(Fr(x), d)) for x in ts.ravel()]).reshape(ts.shape)
    return out if np.ndim(t) else float(out[0])


@lru_cache(maxsize=None)
def phi1_exact() -> RationalPiecewise:
    f = phi_tilde_exact()
    for _ in range(3):
        f = f.box_average(SMOOTHING_WIDTH)
    return f


@lru_cache(maxsize=None)
def phi1() -> Piecewise:
    return Piecewise.from_rational(phi1_exact(), tag="phi1")


@lru_cache(maxsize=None)
def psi1_exact() -> RationalPiecewise:
    # 1/2 (1 - S(20 t - 19)) on [19/20, 1]
    S = smoothstep7()
    mid = pscale(padd((Fr(1),), pscale(pcompose_affine(S, 20, -19), -1)), Fr(1, 2))
    return RationalPiecewise([Fr(19, 20), Fr(1)], [(Fr(1, 2),), mid, (Fr(0),)])


@lru_cache(maxsize=None)
def psi1() -> Piecewise:
    return Piecewise.from_rational(psi1_exact(), tag="psi1")


@lru_cache(maxsize=None)
def plateau_exact() -> RationalPiecewise:
    """1 on (-inf, 1/2], smooth step down on [1/2, 1], 0 beyond."""
    S = smoothstep7()
    mid = padd((Fr(1),), pscale(pcompose_affine(S, 2, -1), -1))
    return RationalPiecewise([Fr(1, 2), Fr(1)], [(Fr(1),), mid, (Fr(0),)])


@lru_cache(maxsize=None)
def plateau() -> Piecewise:
    return Piecewise.from_rational(plateau_exact(), tag="plateau")


@lru_cache(maxsize=None)
def quadratic_cap_exact() -> RationalPiecewise:
    """U with U'' = 2 * plateau(x / 2): U = x^2 on [0, 1], affine for x >= 2."""
    S = smoothstep7()
    mid = padd((Fr(2),), pscale(pcompose_affine(S, 1, -1), -2))
    second = RationalPiecewise([Fr(1), Fr(2)], [(Fr(2),), mid, (Fr(0),)])
    return second.antiderivative().antiderivative()


@lru_cache(maxsize=None)
def quadratic_cap() -> Piecewise:
    return Piecewise.from_rational(quadratic_cap_exact(), tag="quadratic_cap")


def sup_abs(rp: RationalPiecewise, order: int, lo: float, hi: float) -> float:
    """max |f^(order)| on [lo, hi] from critical points of each piece."""
    edges = [Fr(lo)] + [b for b in rp.breaks if lo < b < hi] + [Fr(hi)]
    best = 0.0
    for a, b in zip(edges, edges[1:]):
        p = rp.polys[rp.piece_at((a + b) / 2)]
        for _ in range(order):
            p = pder(p)
        cands = [float(a), float(b)]
        dp = pder(p)
        if len(dp) > 1 or dp[0] != 0:
            roots = np.roots([float(c) for c in reversed(dp)]) if len(dp) > 1 else []
            cands += [r.real for r in roots if abs(r.imag) < 1e-12 and a <= r.real <= b]
        vals = [abs(float(sum(float(c) * x**i for i, c in enumerate(p)))) for x in cands]
        best = max(best, *vals)
    return best


@lru_cache(maxsize=None)
def c0_constant() -> float:
    """Uniform constant c0 valid for every delta in (0, 1/2]."""
    d1 = sup_abs(phi1_exact(), 1, 0.0, 1.0)
    e1 = sup_abs(psi1_exact(), 1, 0.0, 1.0)
    e2 = sup_abs(psi1_exact(), 2, 0.0, 1.0)
    return max(d1 + e1 / sqrt(2.0), e2)


@dataclass(frozen=True)
class CutoffFamily:
    delta: float
    phi_delta: Profile
    psi_delta: Profile
    chi: Profile
    c0: float


def chi_delta(delta: float) -> CutoffFamily:
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    ph = Rescaled(phi1(), delta, delta)
    ps = Rescaled(psi1(), sqrt(delta), delta)
    return CutoffFamily(delta, ph, ps, Sum((ph, ps)), c0_constant())


def S1(s):
    s = np.asarray(s, dtype=float)
    out = np.where(s <= 0.5, 1.0, 2.0 * (1.0 - s))
    return out if out.ndim else float(out)


def S2(s):
    s = np.asarray(s, dtype=float)
    out = np.where(s <= 0.5, 1.0 - 2.0 * s, 0.0)
    return out if out.ndim else float(out)


def linear_bump(width: float) -> Profile:
    """t near 0, zero for t >= width."""
    return Product((Poly((0.0, 1.0)), Rescaled(plateau(), width)))


def check_chi_family(delta: float, points: int = 10_000, slack: float = 1e-10) -> dict:
    """Evaluate every stated bound on a uniform grid; returns name -> (ok, worst)."""
    fam = chi_delta(delta)
    c0 = fam.c0
    r = sqrt(delta)
    t = np.linspace(0.0, 1.5 * r, points)
    j = fam.chi.jet(t, 2)
    out = {}
    near0 = t <= 0.07 * delta  # phi1 agrees with phi-tilde below 3/40
    out["chi_equals_t_near_0"] = (np.max(np.abs(j[0][near0] - t[near0])), slack)
    out["chi_zero_beyond_sqrt_delta"] = (np.max(np.abs(j[0][t >= r])), slack)
    out["chi_nonnegative"] = (max(0.0, -np.min(j[0])), slack)
    out["chi_at_most_half_delta"] = (max(0.0, np.max(j[0]) - delta / 2), slack)
    out["chi_dot_bounded"] = (max(0.0, np.max(np.abs(j[1])) - c0), slack)
    inner = t <= delta
    out["chi_ddot_lower"] = (max(0.0, np.max(-2.0 / delta - j[2][inner])), slack)
    out["chi_ddot_upper"] = (max(0.0, np.max(j[2][inner])), slack)
    mid = (t >= delta) & (t <= r)
    out["chi_ddot_mid"] = (max(0.0, np.max(np.abs(j[2][mid])) - c0), slack)
    return {k: (bool(v <= s), float(v)) for k, (v, s) in out.items()}


def chi_csv(delta: float, points: int = 1001) -> str:
    fam = chi_delta(delta)
    t = np.linspace(0.0, 1.25 * sqrt(delta), points)
    j = fam.chi.jet(t, 2)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "chi", "chi_dot", "chi_ddot"])
    for row in zip(t, *j):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
