"""Scalar profiles p(t) with exact derivatives.

A profile is a small expression tree.  ``jet(t, order)`` returns the
stack ``[p, p', ..., p^(order)]`` evaluated on an array of t values,
computed by Taylor-mode rules (Leibniz for products, the chain rule for
rescaled arguments).  Nothing here differentiates numerically.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

MAX_ORDER = 4


class Profile:
    def jet(self, t, order: int = 2) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t, d: int = 0):
        t = np.asarray(t, dtype=float)
        return self.jet(t, d)[d]

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def to_json(self) -> dict:
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, as_profile(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum((self, Scaled(-1.0, as_profile(other))))

    def __neg__(self):
        return Scaled(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, Profile):
            return Product((self, other))
        return Scaled(float(other), self)

    __rmul__ = __mul__


def as_profile(x) -> Profile:
    return x if isinstance(x, Profile) else Poly((float(x),))


def _t(t):
    return np.asarray(t, dtype=float)


@dataclass(frozen=True, eq=False)
class Poly(Profile):
    """sum_i c_i t^i."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs) or (0.0,))

    def jet(self, t, order=2):
        t = _t(t)
        out = np.zeros((order + 1,) + t.shape)
        c = np.array(self.coeffs)
        for k in range(order + 1):
            if c.size:
                out[k] = np.polynomial.polynomial.polyval(t, c)
            c = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(0)
        return out

    def is_zero(self):
        return all(c == 0.0 for c in self.coeffs)

    def to_json(self):
        return {"op": "poly", "coeffs": list(self.coeffs)}


@dataclass(frozen=True, eq=False)
class Trig(Profile):
    """sin(a t + b) or cos(a t + b)."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"unknown trig kind {self.kind!r}")

    def jet(self, t, order=2):
        x = self.a * _t(t) + self.b
        s, c = np.sin(x), np.cos(x)
        # derivatives of sin cycle through sin, cos, -sin, -cos
        cyc = [s, c, -s, -c]
        off = 0 if self.kind == "sin" else 1
        return np.stack([self.a**k * cyc[(k + off) % 4] for k in range(order + 1)])

    def to_json(self):
        return {"op": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True, eq=False)
class Piecewise(Profile):
    """Piecewise polynomial; piece i is expanded about origins[i].

    ``bounds`` are the interior breakpoints; the first and last pieces
    extend to -inf and +inf.  ``tag`` records where the profile came from.
    """

    bounds: tuple[float, ...]
    origins: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]
    tag: str = ""

    def __post_init__(self):
        deg = max(len(c) for c in self.coeffs)
        mat = np.zeros((len(self.coeffs), deg))
        for i, c in enumerate(self.coeffs):
            mat[i, : len(c)] = c
        ders = [mat]
        for _ in range(MAX_ORDER + 2):
            m = ders[-1]
            ders.append(m[:, 1:] * np.arange(1, m.shape[1]) if m.shape[1] > 1 else np.zeros((m.shape[0], 1)))
        object.__setattr__(self, "_ders", ders)
        object.__setattr__(self, "_b", np.array(self.bounds, dtype=float))
        object.__setattr__(self, "_o", np.array(self.origins, dtype=float))

    def jet(self, t, order=2):
        t = _t(t)
        idx = np.searchsorted(self._b, t, side="right")
        x = t - self._o[idx]
        out = np.empty((order + 1,) + t.shape)
        for k in range(order + 1):
            c = self._ders[k][idx]
            acc = np.zeros(t.shape)
            for j in range(c.shape[-1] - 1, -1, -1):
                acc = acc * x + c[..., j]
            out[k] = acc
        return out

    def breakpoints(self):
        return tuple(self.bounds)

    def to_json(self):
        return {
            "op": "piecewise",
            "tag": self.tag,
            "bounds": list(self.bounds),
            "origins": list(self.origins),
            "coeffs": [list(c) for c in self.coeffs],
        }

    @classmethod
    def from_rational(cls, rp, tag=""):
        b, o, c = rp.local_float_coeffs()
        return cls(tuple(b), tuple(o), tuple(tuple(x) for x in c), tag)


@dataclass(frozen=True, eq=False)
class Rescaled(Profile):
    """amp * p(t / width)."""

    inner: Profile
    width: float
    amp: float = 1.0

    def jet(self, t, order=2):
        j = self.inner.jet(_t(t) / self.width, order)
        return np.stack([self.amp * j[k] / self.width**k for k in range(order + 1)])

    def breakpoints(self):
        return tuple(self.width * b for b in self.inner.breakpoints())

    def to_json(self):
        return {"op": "rescale", "width": self.width, "amp": self.amp, "arg": self.inner.to_json()}


@dataclass(frozen=True, eq=False)
class Scaled(Profile):
    c: float
    inner: Profile

    def jet(self, t, order=2):
        return self.c * self.inner.jet(t, order)

    def breakpoints(self):
        return self.inner.breakpoints()

    def to_json(self):
        return {"op": "scale", "c": self.c, "arg": self.inner.to_json()}


@dataclass(frozen=True, eq=False)
class Sum(Profile):
    args: tuple[Profile, ...]

    def jet(self, t, order=2):
        out = self.args[0].jet(t, order)
        for a in self.args[1:]:
            out = out + a.jet(t, order)
        return out

    def breakpoints(self):
        return tuple(sorted({b for a in self.args for b in a.breakpoints()}))

    def to_json(self):
        return {"op": "sum", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True, eq=False)
class Product(Profile):
    args: tuple[Profile, ...]

    def jet(self, t, order=2):
        out = self.args[0].jet(t, order)
        for a in self.args[1:]:
            g = a.jet(t, order)
            out = np.stack(
                [sum(comb(k, j) * out[j] * g[k - j] for j in range(k + 1)) for k in range(order + 1)]
            )
        return out

    def breakpoints(self):
        return tuple(sorted({b for a in self.args for b in a.breakpoints()}))

    def to_json(self):
        return {"op": "mul", "args": [a.to_json() for a in self.args]}


def from_json(d: dict) -> Profile:
    op = d["op"]
    if op == "poly":
        return Poly(tuple(d["coeffs"]))
    if op in ("sin", "cos"):
        return Trig(op, d["a"], d["b"])
    if op == "piecewise":
        return Piecewise(
            tuple(d["bounds"]), tuple(d["origins"]), tuple(tuple(c) for c in d["coeffs"]), d.get("tag", "")
        )
    if op == "rescale":
        return Rescaled(from_json(d["arg"]), d["width"], d["amp"])
    if op == "scale":
        return Scaled(d["c"], from_json(d["arg"]))
    if op == "sum":
        return Sum(tuple(from_json(a) for a in d["args"]))
    if op == "mul":
        return Product(tuple(from_json(a) for a in d["args"]))
    raise ValueError(f"unknown profile op {op!r}")


def taylor_remainder(p: Profile, degree: int = 2) -> Profile | None:
    """p minus its Taylor polynomial of the given degree at t = 0.

    For polynomials the low coefficients are simply dropped, and ``None``
    comes back when nothing is left, so callers can skip the term.
    """
    if isinstance(p, Poly):
        rest = (0.0,) * (degree + 1) + p.coeffs[degree + 1 :]
        return None if all(c == 0.0 for c in rest) else Poly(rest)
    j = p.jet(np.zeros(1), degree)[:, 0]
    fact = [1, 1, 2, 6, 24, 120]
    return Sum((p, Poly(tuple(-j[k] / fact[k] for k in range(degree + 1)))))


def cos_sq(a: float, b: float) -> Profile:
    """cos^2(a t + b) written as 1/2 + 1/2 cos(2 a t + 2 b)."""
    return Sum((Poly((0.5,)), Scaled(0.5, Trig("cos", 2 * a, 2 * b))))


def sin_sq(a: float, b: float) -> Profile:
    return Sum((Poly((0.5,)), Scaled(-0.5, Trig("cos", 2 * a, 2 * b))))


def union_breaks(profiles: Sequence[Profile]) -> tuple[float, ...]:
    return tuple(sorted({b for p in profiles for b in p.breakpoints()}))
