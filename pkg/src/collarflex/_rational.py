"""Exact piecewise polynomials over the rationals.

Used offline to build the cutoff profiles: smoothing by box averages,
antiderivatives and affine substitutions all stay exact, and only the
final local coefficients are rounded to floats.
"""
from __future__ import annotations

from fractions import Fraction

Fr = Fraction


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(Fr(c) for c in p) if p else (Fr(0),)


def padd(p, q):
    n = max(len(p), len(q))
    return _trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def pscale(p, c):
    return _trim([c * a for a in p])


def pmul(p, q):
    out = [Fr(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def ppow(p, k):
    out = (Fr(1),)
    for _ in range(k):
        out = pmul(out, p)
    return out


def pcompose_affine(p, a, b):
    """p(a*t + b)."""
    lin = (Fr(b), Fr(a))
    out = (Fr(0),)
    for c in reversed(p):
        out = padd(pmul(out, lin), (c,))
    return out


def pshift(p, a):
    """p(t + a)."""
    return pcompose_affine(p, 1, a)


def pint(p):
    return _trim([Fr(0)] + [c / (i + 1) for i, c in enumerate(p)])


def pder(p):
    return _trim([i * c for i, c in enumerate(p)][1:] or [0])


def peval(p, x):
    acc = Fr(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


class RationalPiecewise:
    """Piece i lives on [breaks[i-1], breaks[i]); the outer pieces are unbounded."""

    def __init__(self, breaks, polys):
        breaks = [Fr(b) for b in breaks]
        polys = [_trim(p) for p in polys]
        if len(polys) != len(breaks) + 1:
            raise ValueError("need one more piece than breaks")
        if any(b1 >= b2 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("breaks must increase")
        # merge identical neighbours
        nb, npoly = [], [polys[0]]
        for b, p in zip(breaks, polys[1:]):
            if p == npoly[-1]:
                continue
            nb.append(b)
            npoly.append(p)
        self.breaks = nb
        self.polys = npoly

    def piece_at(self, x):
        i = 0
        while i < len(self.breaks) and x >= self.breaks[i]:
            i += 1
        return i

    def __call__(self, x, order=0):
        p = self.polys[self.piece_at(Fr(x))]
        for _ in range(order):
            p = pder(p)
        return peval(p, Fr(x))

    def derivative(self):
        return RationalPiecewise(self.breaks, [pder(p) for p in self.polys])

    def antiderivative(self):
        """Continuous antiderivative, zero at t = 0 (0 must sit in the first piece)."""
        if self.breaks and self.breaks[0] <= 0:
            raise ValueError("origin must lie in the first piece")
        out = [pint(self.polys[0])]
        for b, p in zip(self.breaks, self.polys[1:]):
            F = pint(p)
            out.append(padd(F, (peval(out[-1], b) - peval(F, b),)))
        return RationalPiecewise(self.breaks, out)

    def box_average(self, eps):
        """t -> (1/eps) * integral of f over [t - eps/2, t + eps/2]."""
        eps = Fr(eps)
        F = self.antiderivative()
        nb = sorted({b + s * eps / 2 for b in self.breaks for s in (-1, 1)})
        probes = ([nb[0] - 1] if nb else [Fr(0)]) + [
            (a + b) / 2 for a, b in zip(nb, nb[1:])
        ] + ([nb[-1] + 1] if nb else [])
        polys = []
        for x in probes:
            hi = F.polys[F.piece_at(x + eps / 2)]
            lo = F.polys[F.piece_at(x - eps / 2)]
            polys.append(pscale(padd(pshift(hi, eps / 2), pscale(pshift(lo, -eps / 2), -1)), 1 / eps))
        return RationalPiecewise(nb, polys)

    def local_float_coeffs(self):
        """(bounds, origins, coeffs), each piece re-expanded about its left end.

        The unbounded first piece is expanded about 0 when 0 lies in it, so
        values at t = 0 are the exact float coefficients.
        """
        first = Fr(0) if not self.breaks or self.breaks[0] > 0 else self.breaks[0]
        origins = [first] + list(self.breaks)
        coeffs = [[float(c) for c in pshift(p, o)] for p, o in zip(self.polys, origins)]
        return [float(b) for b in self.breaks], [float(o) for o in origins], coeffs


def smoothstep7():
    """S(x) = 35x^4 - 84x^5 + 70x^6 - 20x^7: S(0)=0, S(1)=1, flat to third order."""
    return (Fr(0), Fr(0), Fr(0), Fr(0), Fr(35), Fr(-84), Fr(70), Fr(-20))

