"""Boundary backends and symmetric tensor fields on them.

Two backends:

* ``RoundSphere(dim)``: fields are multiples c * g_round, stored as 1x1
  matrices; traces carry a multiplicity ``dim``.
* ``FlatTorus(dim, lengths, resolution)``: full dim x dim matrices on a
  periodic grid, intrinsic curvature by centered differences.

Field values always have shape ``(nodes, k, k)``; batched slices carry
extra leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ASYM_TOL = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SymTensorField:
    values: np.ndarray
    backend: str  # "isotropic" or "grid"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise GeometryError(f"field values must have shape (nodes, k, k), got {v.shape}")
        asym = np.max(np.abs(v - np.swapaxes(v, 1, 2))) if v.size else 0.0
        if asym > ASYM_TOL:
            raise GeometryError(f"input not symmetric (max asymmetry {asym:.2e})")
        v = 0.5 * (v + np.swapaxes(v, 1, 2))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.backend == "isotropic" and v.shape != (1, 1, 1):
            raise GeometryError("isotropic fields are a single scale")

    @classmethod
    def isotropic(cls, scale: float) -> "SymTensorField":
        return cls(np.full((1, 1, 1), float(scale)), "isotropic")

    @classmethod
    def grid(cls, values) -> "SymTensorField":
        return cls(np.asarray(values, dtype=float), "grid")

    @property
    def scale(self) -> float:
        if self.backend != "isotropic":
            raise GeometryError("scale is only defined for isotropic fields")
        return float(self.values[0, 0, 0])

    def _like(self, v):
        return SymTensorField(v, self.backend)

    def _check(self, other):
        if not isinstance(other, SymTensorField) or other.backend != self.backend:
            raise GeometryError("backend mismatch")
        if other.values.shape != self.values.shape:
            raise GeometryError("shape mismatch")

    def __add__(self, other):
        self._check(other)
        return self._like(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self._like(self.values - other.values)

    def __mul__(self, c):
        return self._like(float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def to_json(self):
        if self.backend == "isotropic":
            return {"backend": "isotropic", "scale": self.scale}
        return {"backend": "grid", "shape": list(self.values.shape), "values": self.values.ravel().tolist()}

    @classmethod
    def from_json(cls, d):
        if d["backend"] == "isotropic":
            return cls.isotropic(d["scale"])
        return cls.grid(np.asarray(d["values"], dtype=float).reshape(d["shape"]))


# -- batched linear algebra on (..., k, k) with a trace multiplicity --------


def inv(G):
    if G.shape[-1] == 1:
        return 1.0 / G
    return np.linalg.inv(G)


def trace(X, mult):
    return mult * np.trace(X, axis1=-2, axis2=-1)


def tr_against(G, H, mult):
    """tr_G(H) = sum of H(e_i, e_i) over a G-orthonormal frame."""
    return trace(inv(G) @ H, mult)


def g_norm(G, X, mult):
    """Frobenius norm of X in a G-orthonormal frame."""
    Y = inv(G) @ X
    return np.sqrt(np.maximum(trace(Y @ Y, mult), 0.0))


def rel_eigs(G, X):
    """Eigenvalues of X relative to G (i.e. of G^{-1} X), ascending."""
    if G.shape[-1] == 1:
        return (X / G)[..., 0]
    L = np.linalg.cholesky(G)
    Li = np.linalg.inv(L)
    return np.linalg.eigvalsh(Li @ X @ np.swapaxes(Li, -1, -2))


def is_pos_def(G) -> np.ndarray:
    if G.shape[-1] == 1:
        return G[..., 0, 0] > 0
    return np.all(np.linalg.eigvalsh(G) > 0, axis=-1)


# -- backends ------------------------------------------------------------------


class BoundaryGeometry:
    dim: int
    mult: int
    k: int
    nodes: int
    backend: str

    @property
    def n(self) -> int:
        return self.dim + 1

    def check_field(self, A: SymTensorField):
        if A.backend != self.backend or A.values.shape != (self.nodes, self.k, self.k):
            raise GeometryError(f"field of backend {A.backend!r} / shape {A.values.shape} does not fit {self!r}")

    def slice_scal(self, G: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spatial_gradient(self, X: np.ndarray):
        """Per-axis derivatives of a field batch, or None when constant along the boundary."""
        return None

    def unit(self) -> SymTensorField:
        raise NotImplementedError


@dataclass(frozen=True)
class RoundSphere(BoundaryGeometry):
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise GeometryError("boundary dimension must be >= 1")

    backend = "isotropic"
    k = 1
    nodes = 1

    @property
    def mult(self):
        return self.dim

    def slice_scal(self, G):
        # scal(c g_round) on S^d = d (d - 1) / c
        return self.dim * (self.dim - 1) / G[..., 0, 0]

    def unit(self):
        return SymTensorField.isotropic(1.0)

    def to_json(self):
        return {"kind": "round-sphere", "dim": self.dim}


@dataclass(frozen=True)
class FlatTorus(BoundaryGeometry):
    dim: int
    lengths: tuple[float, ...]
    resolution: int = 32

    backend = "grid"
    mult = 1

    def __post_init__(self):
        if self.dim < 1:
            raise GeometryError("boundary dimension must be >= 1")
        if len(self.lengths) != self.dim:
            raise GeometryError("one period length per axis")
        if self.resolution < 8:
            raise GeometryError("torus resolution must be >= 8 per axis")

    @property
    def k(self):
        return self.dim

    @property
    def nodes(self):
        return self.resolution**self.dim

    @property
    def spacing(self):
        return tuple(L / self.resolution for L in self.lengths)

    def coords(self) -> list[np.ndarray]:
        """Node coordinates, each of shape (nodes,), in row-major node order."""
        axes = [np.arange(self.resolution) * h for h in self.spacing]
        return [c.ravel() for c in np.meshgrid(*axes, indexing="ij")]

    def field_from(self, fn) -> SymTensorField:
        """Build a grid field from fn(*coords) -> (nodes, k, k)."""
        return SymTensorField.grid(fn(*self.coords()))

    def unit(self):
        return SymTensorField.grid(np.broadcast_to(np.eye(self.dim), (self.nodes, self.dim, self.dim)))

    def _grid(self, X):
        lead = X.shape[: X.ndim - 3]
        return X.reshape(lead + (self.resolution,) * self.dim + X.shape[-2:]), len(lead)

    def _d(self, Y, axis, nl, h):
        ax = nl + axis
        return (np.roll(Y, -1, axis=ax) - np.roll(Y, 1, axis=ax)) / (2.0 * h)

    def spatial_gradient(self, X):
        Y, nl = self._grid(X)
        out = [self._d(Y, a, nl, h).reshape(X.shape) for a, h in enumerate(self.spacing)]
        return np.stack(out, axis=-3)  # (..., nodes, dim, k, k)

    def slice_scal(self, G):
        d = self.dim
        if d == 1:
            return np.zeros(G.shape[:-2])
        Y, nl = self._grid(G)
        gi = np.linalg.inv(Y)
        # D[..., l, i, j] = d_l g_ij
        D = np.stack([self._d(Y, a, nl, h) for a, h in enumerate(self.spacing)], axis=-3)
        first = 0.5 * (
            np.einsum("...ijl->...lij", D) + np.einsum("...jil->...lij", D) - D
        )  # Gamma_{l,ij}
        Gam = np.einsum("...kl,...lij->...kij", gi, first)  # Gamma^k_ij
        dGam = np.stack([self._d(Gam, a, nl, h) for a, h in enumerate(self.spacing)], axis=-4)  # [m,k,i,j]
        ric = (
            np.einsum("...kkij->...ij", dGam)
            - np.einsum("...jkik->...ij", dGam)
            + np.einsum("...kkl,...lij->...ij", Gam, Gam)
            - np.einsum("...kjl,...lik->...ij", Gam, Gam)
        )
        scal = np.einsum("...ij,...ij->...", gi, ric)
        return scal.reshape(G.shape[:-2])

    def to_json(self):
        return {"kind": "flat-torus", "dim": self.dim, "lengths": list(self.lengths), "resolution": self.resolution}


def geometry_from_json(d) -> BoundaryGeometry:
    if d["kind"] == "round-sphere":
        return RoundSphere(d["dim"])
    if d["kind"] == "flat-torus":
        return FlatTorus(d["dim"], tuple(d["lengths"]), d["resolution"])
    raise GeometryError(f"unknown geometry kind {d['kind']!r}")


def as_matrix_batch(fields: Sequence[SymTensorField]) -> np.ndarray:
    return np.stack([f.values for f in fields])
