"""Principal eigenpair of the conformal Laplacian with the Robin condition.

Radial metrics dr^2 + a(r)^2 g_round on [r0, r1] only.  The operator

    L = 4 (n-1)/(n-2) Delta + scal,   Delta >= 0,
    boundary:  d(phi)/d(nu) = (n-2)/2 H phi,  nu the interior normal,

is discretised in energy form on a vertex-centred grid: midpoint fluxes,
exact cell volumes (Gauss-Legendre), and the Robin boundary integral
2 (n-1) H phi^2 dA added to the boundary rows.  The stiffness matrix K
and mass matrix M are symmetric, so L ~ M^{-1} K is self-adjoint in the
discrete L2(dV) product and the Rayleigh quotient is phi.K.phi / phi.M.phi.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import gamma, pi
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.optimize import brentq

from .collar import PreconditionError


@dataclass(frozen=True)
class RadialProfile:
    name: str
    a: Callable
    da: Callable
    dda: Callable
    r0: float
    r1: float
    scal_fn: Callable | None = None  # closed form, needed where a = 0

    def has_center(self) -> bool:
        return self.a(self.r0) == 0.0

    def scal(self, r, n):
        if self.scal_fn is not None:
            return np.broadcast_to(self.scal_fn(np.asarray(r, float), n), np.shape(r)).astype(float)
        a, da, dda = self.a(r), self.da(r), self.dda(r)
        return (n - 1) * (n - 2) * (1 - da**2) / a**2 - 2 * (n - 1) * dda / a

    def H_outer(self):
        return self.da(self.r1) / self.a(self.r1)

    def H_inner(self):
        return -self.da(self.r0) / self.a(self.r0)


def flat_ball(R: float = 1.0) -> RadialProfile:
    return RadialProfile("flatball", lambda r: np.asarray(r, float) * 1.0, lambda r: np.ones_like(np.asarray(r, float)),
                         lambda r: np.zeros_like(np.asarray(r, float)), 0.0, R, lambda r, n: 0.0 * r)


def spherical_cap(rho: float) -> RadialProfile:
    return RadialProfile(f"cap:{rho}", np.sin, np.cos, lambda r: -np.sin(r), 0.0, rho, lambda r, n: n * (n - 1) + 0 * r)


def annulus(r0: float, r1: float) -> RadialProfile:
    if not 0 < r0 < r1:
        raise PreconditionError("annulus needs 0 < a < b")
    return RadialProfile(f"annulus:{r0},{r1}", lambda r: np.asarray(r, float) * 1.0,
                         lambda r: np.ones_like(np.asarray(r, float)), lambda r: np.zeros_like(np.asarray(r, float)),
                         r0, r1, lambda r, n: 0.0 * r)


def product(c: float = 1.0, length: float = 1.0) -> RadialProfile:
    """[0, L] x S^{n-1}(c): scal = (n-1)(n-2)/c^2 and H = 0 on both ends."""
    const = lambda r: c + 0.0 * np.asarray(r, float)
    zero = lambda r: 0.0 * np.asarray(r, float)
    return RadialProfile(f"product:{c},{length}", const, zero, zero, 0.0, length,
                         lambda r, n: (n - 1) * (n - 2) / c**2 + 0 * r)


def parse_profile(text: str) -> RadialProfile:
    name, _, arg = text.partition(":")
    if name == "flatball":
        return flat_ball(float(arg) if arg else 1.0)
    if name == "cap":
        return spherical_cap(float(arg))
    if name == "annulus":
        a, b = (float(x) for x in arg.split(","))
        return annulus(a, b)
    if name == "product":
        c, _, L = arg.partition(",")
        return product(float(c or 1.0), float(L or 1.0))
    raise ValueError(f"unknown profile {text!r}")


def sphere_area(n: int) -> float:
    """Area of the unit S^{n-1}."""
    return 2 * pi ** (n / 2) / gamma(n / 2)


@dataclass(frozen=True)
class RobinProblem:
    n: int
    profile: RadialProfile
    r: np.ndarray
    diag: np.ndarray  # K
    off: np.ndarray
    mass: np.ndarray  # M (diagonal)
    scal: np.ndarray
    boundary: dict  # node index -> (H, area)

    @property
    def c(self) -> float:
        return 4.0 * (self.n - 1) / (self.n - 2)

    def apply_K(self, phi):
        out = self.diag * phi
        out[:-1] += self.off * phi[1:]
        out[1:] += self.off * phi[:-1]
        return out

    def apply(self, phi):
        """The discrete operator M^{-1} K."""
        return self.apply_K(phi) / self.mass

    def symmetry_residual(self, trials: int = 4, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        r = 0.0
        for _ in range(trials):
            u, v = rng.standard_normal((2, self.r.size))
            a, b = (self.apply(u) * self.mass) @ v, u @ (self.apply(v) * self.mass)
            r = max(r, abs(a - b) / max(abs(a), abs(b), 1e-300))
        return r


def _gauss_volume(a, lo, hi, n, pts=8):
    x, w = np.polynomial.legendre.leggauss(pts)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    return half * (a(nodes) ** (n - 1) @ w)


def assemble(profile: RadialProfile, n: int = 3, N: int = 256) -> RobinProblem:
    if n < 3:
        raise PreconditionError("the conformal Laplacian needs n >= 3")
    if N < 64:
        raise PreconditionError("grid size N must be >= 64")
    r0, r1 = profile.r0, profile.r1
    h = (r1 - r0) / N
    r = r0 + h * np.arange(N + 1)
    om = sphere_area(n)
    c = 4.0 * (n - 1) / (n - 2)
    a = profile.a
    if np.any(a(r[1:-1]) <= 0) or a(r1) <= 0 or a(r0) < 0:
        raise PreconditionError("profile must be positive inside the domain")
    lo = np.maximum(r - h / 2, r0)
    hi = np.minimum(r + h / 2, r1)
    mass = om * _gauss_volume(a, lo, hi, n)
    kap = c * om * a(r[:-1] + h / 2) ** (n - 1) / h
    diag = np.zeros(N + 1)
    diag[:-1] += kap
    diag[1:] += kap
    scal = profile.scal(r, n)
    diag += mass * scal
    boundary = {}
    H1 = profile.H_outer()
    A1 = om * a(r1) ** (n - 1)
    diag[-1] += 2 * (n - 1) * H1 * A1
    boundary[N] = (float(H1), float(A1))
    if not profile.has_center():
        H0 = profile.H_inner()
        A0 = om * a(r0) ** (n - 1)
        diag[0] += 2 * (n - 1) * H0 * A0
        boundary[0] = (float(H0), float(A0))
    return RobinProblem(n, profile, r, diag, -kap, mass, scal, boundary)


@dataclass(frozen=True)
class Eigenpair:
    lam: float
    phi: np.ndarray
    residual: float


def rayleigh(p: RobinProblem, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    den = phi @ (p.mass * phi)
    if den == 0:
        raise ValueError("phi vanishes identically")
    return float(phi @ p.apply_K(phi) / den)


def first_eigenpair(p: RobinProblem, iters: int = 50) -> Eigenpair:
    """Bisection for the bottom eigenvalue, then shifted inverse iteration from all-ones.

    Iterates on the symmetric form M^{-1/2} K M^{-1/2}: the centre rows carry
    masses of order h^3, and iterating on K - mu M directly loses accuracy there.
    """
    w = 1.0 / np.sqrt(p.mass)
    d, e = p.diag * w * w, p.off * w[:-1] * w[1:]
    lam0 = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))[0]
    top = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(d.size - 1, d.size - 1))[0]
    scale = max(abs(lam0), abs(top))

    def S(x):
        y = d * x
        y[:-1] += e * x[1:]
        y[1:] += e * x[:-1]
        return y

    ab = np.zeros((3, d.size))
    ab[0, 1:] = e
    ab[2, :-1] = e
    x = np.ones(d.size) / w
    x /= np.linalg.norm(x)
    shift = 1e-7
    lam, res = lam0, np.inf
    for _ in range(iters):
        ab[1] = d - (lam0 - shift * max(1.0, abs(lam0)))
        try:
            y = solve_banded((1, 1), ab, x)
        except np.linalg.LinAlgError:
            shift *= 10
            continue
        x = y / np.linalg.norm(y)
        lam = float(x @ S(x))
        new = np.linalg.norm(S(x) - lam * x) / scale
        if new <= 1e-13 or new >= 0.5 * res:
            res = min(res, new)
            break
        res = new
    if res > 1e-8:
        raise RuntimeError(f"inverse iteration did not converge (residual {res:.2e})")
    phi = x * w
    if phi.sum() < 0:
        phi = -phi
    if np.any(phi <= 0):
        raise RuntimeError("first eigenfunction is not positive; discretisation problem")
    return Eigenpair(lam, phi, float(res))


def _derivs(r, f):
    """Second-order first and second derivatives on a uniform grid."""
    h = r[1] - r[0]
    d1 = np.gradient(f, h, edge_order=2)
    d2 = np.empty_like(f)
    d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    d2[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    d2[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return d1, d2


def boundary_slope(r, f) -> float:
    """Third-order one-sided derivative at the right end."""
    h = r[1] - r[0]
    return (11 * f[-1] - 18 * f[-2] + 9 * f[-3] - 2 * f[-4]) / (6 * h)


@dataclass
class ConformalReport:
    scale_exponent: float
    scal_hat: np.ndarray
    scal_expected: np.ndarray
    rel_error: float
    H_hat: float
    min_scal_hat: float
    positive: bool

    def to_json(self):
        return {
            "scale_exponent": self.scale_exponent,
            "scal_hat_rel_error": self.rel_error,
            "H_hat": self.H_hat,
            "min_scal_hat": self.min_scal_hat,
            "scal_hat_positive": self.positive,
        }


def conformal_change(p: RobinProblem, phi, lam: float, center_window: float = 0.05) -> ConformalReport:
    """g_hat = phi^{4/(n-2)} g, curvature from the warped-product formula.

    The profile of g_hat is psi a in the arclength rho with d rho = psi dr,
    psi = phi^{2/(n-2)}; scal and H are recomputed from that profile with
    finite differences in r and compared with lam phi^{-4/(n-2)}. Within
    ``center_window`` of a centre the transformation law is used instead.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(phi <= 0):
        raise PreconditionError("conformal factor must be positive")
    n, r, prof = p.n, p.r, p.profile
    e = 2.0 / (n - 2)
    d1, d2 = _derivs(r, phi)
    psi = phi**e
    dpsi = e * phi ** (e - 1) * d1
    ddpsi = e * (e - 1) * phi ** (e - 2) * d1**2 + e * phi ** (e - 1) * d2
    a, da, dda = prof.a(r), prof.da(r), prof.dda(r)
    A = psi * a
    Ar = dpsi * a + psi * da
    Arr = ddpsi * a + 2 * dpsi * da + psi * dda
    Arho = Ar / psi
    Arhorho = (Arr / psi - Ar * dpsi / psi**2) / psi
    expected = lam * phi ** (-2 * e)
    with np.errstate(divide="ignore", invalid="ignore"):
        scal_hat = (n - 1) * (n - 2) * (1 - Arho**2) / A**2 - 2 * (n - 1) * Arhorho / A
    if prof.has_center():
        # near the centre the scheme's error has a grid-scale layer that
        # divided differences amplify; fit phi as an even polynomial over a
        # fixed window and apply the transformation law there instead
        win = max(center_window, 8 * (r[1] - r[0]))
        w = r <= win
        c = np.polynomial.polynomial.polyfit(r[w] ** 2, phi[w], 3)
        rw = r[w]
        dd = sum(c[m] * 2 * m * (2 * m - 1) * rw ** (2 * m - 2) for m in (1, 2, 3))
        d_over_r = sum(c[m] * 2 * m * rw ** (2 * m - 2) for m in (1, 2, 3))
        with np.errstate(divide="ignore", invalid="ignore"):
            ra = np.where(rw > 0, rw * prof.da(rw) / prof.a(rw), 1.0)  # r a'/a -> 1
        lap = dd + (n - 1) * ra * d_over_r
        scal_hat[w] = phi[w] ** (-(n + 2) / (n - 2)) * (p.c * -lap + p.scal[w] * phi[w])
    rel = float(np.max(np.abs(scal_hat - expected) / np.abs(expected)))
    H_hat = (prof.H_outer() + e * boundary_slope(r, phi) / phi[-1]) / psi[-1]
    return ConformalReport(2 * e, scal_hat, expected, rel, float(H_hat), float(scal_hat.min()),
                           bool(scal_hat.min() > 0))


def flatball_oracle(n: int = 3) -> float:
    """lambda_1 = 8 k^2 with tan k = 2 k (n = 3, unit ball)."""
    if n != 3:
        raise ValueError("closed-form oracle only for n = 3")
    k = brentq(lambda x: np.tan(x) - 2 * x, 1.0, 1.5)
    return 8 * k * k


def profile_csv(p: RobinProblem, pair: Eigenpair, rep: ConformalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "phi", "scal_hat"])
    for row in zip(p.r, pair.phi, rep.scal_hat):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def solve(profile: RadialProfile, n: int = 3, N: int = 2048, h_tol: float = 1e-6) -> tuple[dict, RobinProblem, Eigenpair, ConformalReport]:
    """Assemble, extract the first eigenpair and check the conformal output."""
    p = assemble(profile, n, N)
    pair = first_eigenpair(p)
    rep = conformal_change(p, pair.phi, pair.lam)
    out = {
        "profile": profile.name,
        "n": n,
        "grid": N,
        "lambda1": pair.lam,
        "residual": pair.residual,
        "rayleigh": rayleigh(p, pair.phi),
        "phi_positive": bool(np.all(pair.phi > 0)),
        "conformal": rep.to_json(),
    }
    if profile.name.startswith("flatball") and n == 3 and profile.r1 == 1.0:
        out["oracle"] = flatball_oracle(3)
    out["pass"] = bool(pair.lam > 0 and rep.positive and abs(rep.H_hat) <= h_tol)
    return out, p, pair, rep
