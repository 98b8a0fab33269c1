"""Collar metrics dt^2 + g_t, g_t = sum_j p_j(t) A_j, and their curvature.

Sign conventions: the interior unit normal is +d/dt, II_t = -1/2 g_t',
H = tr(W)/(n-1), and

    scal = scal(g_t) + 3 tr(W^2) - tr(W)^2 - tr_{g_t}(g_t'').
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geometry as geo
from .geometry import BoundaryGeometry, SymTensorField, geometry_from_json
from .profiles import Poly, Profile, from_json as profile_from_json

EIG_TOL = 1e-10


class PreconditionError(ValueError):
    """Raised when an operation's stated precondition does not hold."""


class VerificationError(RuntimeError):
    """Raised when a search loop exhausts its budget; carries the last report."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


@dataclass(frozen=True, eq=False)
class CollarMetric:
    geometry: BoundaryGeometry
    t_max: float
    terms: tuple[tuple[Profile, SymTensorField], ...]

    def __post_init__(self):
        if not self.t_max > 0:
            raise PreconditionError("t_max must be positive")
        if not self.terms:
            raise PreconditionError("a collar metric needs at least one term")
        object.__setattr__(self, "terms", tuple((p, A) for p, A in self.terms))
        for _, A in self.terms:
            self.geometry.check_field(A)

    @property
    def n(self) -> int:
        return self.geometry.n

    def slices(self, t, order: int = 2) -> np.ndarray:
        """Exact jets of g_t: shape (order+1, len(t), nodes, k, k)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = None
        for p, A in self.terms:
            j = p.jet(t, order)[:, :, None, None, None] * A.values[None, None]
            out = j if out is None else out + j
        return out

    def boundary_jets(self, order: int = 4) -> np.ndarray:
        return self.slices(np.zeros(1), order)[:, 0]

    def boundary_field(self, order: int = 0) -> SymTensorField:
        return SymTensorField(self.boundary_jets(order)[order], self.geometry.backend)

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted({b for p, _ in self.terms for b in p.breakpoints() if 0 < b < self.t_max}))

    def plus(self, extra: Sequence[tuple[Profile, SymTensorField]]) -> "CollarMetric":
        return CollarMetric(self.geometry, self.t_max, self.terms + tuple(extra))

    def to_json(self) -> dict:
        return {
            "geometry": self.geometry.to_json(),
            "t_max": self.t_max,
            "terms": [{"profile": p.to_json(), "tensor": A.to_json()} for p, A in self.terms],
        }

    @classmethod
    def from_json(cls, d) -> "CollarMetric":
        return cls(
            geometry_from_json(d["geometry"]),
            d["t_max"],
            tuple((profile_from_json(x["profile"]), SymTensorField.from_json(x["tensor"])) for x in d["terms"]),
        )


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


# -- curvature on batches of t ---------------------------------------------------


def curvature_batch(cm: CollarMetric, t) -> dict:
    """All curvature quantities at an array of t values (arrays over (t, node))."""
    G0, G1, G2 = cm.slices(t, 2)
    geom, mult, n = cm.geometry, cm.geometry.mult, cm.n
    if not np.all(geo.is_pos_def(G0)):
        raise PreconditionError("slice metric is not positive definite on the sampled range")
    Gi = geo.inv(G0)
    II = -0.5 * G1
    W = Gi @ II
    trW = geo.trace(W, mult)
    trW2 = geo.trace(W @ W, mult)
    trG2 = geo.trace(Gi @ G2, mult)
    intrinsic = geom.slice_scal(G0)
    return {
        "G": G0,
        "II": II,
        "W": W,
        "H": trW / (n - 1),
        "scal": intrinsic + 3.0 * trW2 - trW**2 - trG2,
        "lower": intrinsic - trW**2 - trG2,
        "II_eigs": geo.rel_eigs(G0, II),
    }


def _check_t(cm, t):
    if not 0.0 <= t < cm.t_max:
        raise ValueError(f"t = {t} outside [0, {cm.t_max})")


def second_fundamental_form(cm: CollarMetric, t: float) -> SymTensorField:
    _check_t(cm, t)
    return SymTensorField(-0.5 * cm.slices([t], 1)[1, 0], cm.geometry.backend)


def weingarten(cm: CollarMetric, t: float) -> np.ndarray:
    """W_t as (nodes, k, k); on the round backend the 1x1 entry multiplies the identity."""
    _check_t(cm, t)
    G0, G1 = cm.slices([t], 1)[:, 0]
    if not np.all(geo.is_pos_def(G0)):
        raise PreconditionError("singular slice metric")
    return geo.inv(G0) @ (-0.5 * G1)


def mean_curvature(cm: CollarMetric, t: float) -> np.ndarray:
    _check_t(cm, t)
    return curvature_batch(cm, [t])["H"][0]


def collar_scalar(cm: CollarMetric, t: float) -> np.ndarray:
    _check_t(cm, t)
    return curvature_batch(cm, [t])["scal"][0]


def scal_lower_bound(cm: CollarMetric, t: float) -> np.ndarray:
    _check_t(cm, t)
    return curvature_batch(cm, [t])["lower"][0]


def _mult_of(g: SymTensorField, dim: int | None):
    if g.backend == "isotropic":
        if dim is None:
            raise ValueError("isotropic traces need the boundary dimension")
        return dim
    return 1


def trace_against(g: SymTensorField, h: SymTensorField, dim: int | None = None) -> np.ndarray:
    """Per-node tr_g(h).  ``dim`` (= n-1) is needed for isotropic fields."""
    if not np.all(geo.is_pos_def(g.values)):
        raise PreconditionError("g is not positive definite")
    return geo.tr_against(g.values, h.values, _mult_of(g, dim))


def trace_comparison_arrays(g0, g1, h, mult=1, tol=1e-12):
    """Vectorised core on (..., k, k) arrays; returns (lhs, rhs, ok)."""
    d = geo.g_norm(g0, g1 - g0, mult)
    if np.any(d > 0.5):
        raise PreconditionError(f"|g1 - g0|_g0 = {d.max():.3g} exceeds 1/2")
    lhs = np.abs(geo.tr_against(g1, h, mult) - geo.tr_against(g0, h, mult))
    rhs = 2.0 * d * geo.g_norm(g0, h, mult)
    return lhs, rhs, lhs <= rhs + tol


def trace_comparison_check(g0: SymTensorField, g1: SymTensorField, h: SymTensorField, dim: int | None = None):
    lhs, rhs, ok = trace_comparison_arrays(g0.values, g1.values, h.values, _mult_of(g0, dim))
    return lhs, rhs, bool(np.all(ok))


# -- boundary predicates ---------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    margin: float | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self):
        d = {"name": self.name, "pass": bool(self.passed), "residual": float(self.residual)}
        if self.margin is not None:
            d["margin"] = float(self.margin)
        return d


def _field(x):
    return x.values if isinstance(x, SymTensorField) else np.asarray(x, dtype=float)


def check_boundary_condition(cm: CollarMetric, condition: str, *, h0: float = 0.0, k=None, C: float | None = None,
                             radius: float = 0.0, tol: float = EIG_TOL) -> CheckResult:
    """Boundary predicates: ``H>=``, ``H=``, ``II>=h0``, ``II=h0``, ``II>=k``, ``II=k``,
    ``c-normal``, ``cone`` and ``doubling``.

    ``radius > 0`` additionally samples the closed-form collar on [0, radius].
    """
    J = cm.boundary_jets(4)
    g0, mult, n = J[0], cm.geometry.mult, cm.n
    II = -0.5 * J[1]
    if condition in ("H>=", "H="):
        H = geo.trace(geo.inv(g0) @ II, mult) / (n - 1)
        diff = H - h0
        if condition == "H>=":
            m = float(diff.min())
            return CheckResult(condition, m >= -tol, max(0.0, -m), margin=m)
        r = float(np.abs(diff).max())
        return CheckResult(condition, r <= tol, r)
    if condition in ("II>=h0", "II=h0", "II>=k", "II=k"):
        if condition.endswith("h0"):
            target = h0 * g0
        else:
            if k is None:
                raise ValueError("condition needs k")
            target = _field(k)
        e = geo.rel_eigs(g0, II - target)
        if condition.startswith("II>="):
            m = float(np.min(e))
            return CheckResult(condition, m >= -tol, max(0.0, -m), margin=m)
        r = float(np.max(np.abs(e)))
        return CheckResult(condition, r <= tol, r)
    if condition == "doubling":
        r = max(float(np.max(geo.g_norm(g0, J[l], mult))) for l in (1, 3))
        return CheckResult(condition, r <= tol, r)
    if condition in ("c-normal", "cone"):
        if condition == "c-normal":
            if C is None:
                raise ValueError("c-normal needs C")
            want = [g0, J[1], -2.0 * C * g0, 0 * g0, 0 * g0]
            model = lambda t: g0 + t * J[1] - C * t**2 * g0
        else:
            want = [g0, -2.0 * h0 * g0, 2.0 * h0**2 * g0, 0 * g0, 0 * g0]
            model = lambda t: (1.0 - t * h0) ** 2 * g0
        r = max(float(np.max(geo.g_norm(g0, J[l] - want[l], mult))) for l in range(5))
        scale = 1.0 + max(float(np.max(geo.g_norm(g0, J[l], mult))) for l in range(3))
        r /= scale
        if radius > 0:
            ts = np.linspace(0.0, min(radius, cm.t_max * (1 - 1e-12)), 65)
            Gs = cm.slices(ts, 0)[0]
            for i, t in enumerate(ts):
                r = max(r, float(np.max(geo.g_norm(g0, Gs[i] - model(t), mult))) / scale)
        return CheckResult(condition, r <= tol, r)
    raise ValueError(f"unknown condition {condition!r}")


def c_normal_constant(cm: CollarMetric) -> np.ndarray:
    """C with g0'' = -2 C g0, per node (NaN where the 2-jet is not of that form)."""
    J = cm.boundary_jets(2)
    ratio = geo.rel_eigs(J[0], J[2])
    spread = np.ptp(ratio, axis=-1)
    return np.where(spread <= 1e-9 * (1 + np.abs(ratio).max()), -0.5 * ratio.mean(axis=-1), np.nan)


# -- drift -----------------------------------------------------------------------


def sample_ts(cm: CollarMetric, per_interval: int = 129, extra: Sequence[float] = ()) -> np.ndarray:
    """Uniform points on every interval between consecutive breakpoints, up to t_max."""
    top = cm.t_max * (1.0 - 1e-9)
    edges = sorted({0.0, top, *[b for b in cm.breakpoints() if b < top], *[e for e in extra if 0 < e < top]})
    pts = [np.linspace(a, b, per_interval) for a, b in zip(edges, edges[1:])]
    pts.append(np.linspace(0.0, top, per_interval))
    return np.unique(np.concatenate(pts))


def c1_drift(cm_a: CollarMetric, cm_b: CollarMetric, per_interval: int = 129) -> float:
    if cm_a.geometry != cm_b.geometry or cm_a.t_max != cm_b.t_max:
        raise PreconditionError("geometry mismatch")
    ts = np.union1d(sample_ts(cm_a, per_interval), sample_ts(cm_b, per_interval))
    A = cm_a.slices(ts, 1)
    B = cm_b.slices(ts, 1)
    D0, D1 = A[0] - B[0], A[1] - B[1]
    mult = cm_a.geometry.mult
    c0 = geo.g_norm(A[0], D0, mult)
    c1 = geo.g_norm(A[0], D1, mult) ** 2
    grad = cm_a.geometry.spatial_gradient(D0)
    if grad is not None:
        Gi = geo.inv(A[0])
        Y = [Gi @ grad[..., a, :, :] for a in range(grad.shape[-3])]
        # sum_ab g^{ab} <d_a D, d_b D>_g
        for a, Ya in enumerate(Y):
            for b, Yb in enumerate(Y):
                c1 = c1 + Gi[..., a, b] * geo.trace(Ya @ Yb, mult)
    return float(np.max(c0 + np.sqrt(c1)))


def product_cylinder(geometry: BoundaryGeometry, g0: SymTensorField, t_max: float = 1.0) -> CollarMetric:
    return CollarMetric(geometry, t_max, ((Poly((1.0,)), g0),))
