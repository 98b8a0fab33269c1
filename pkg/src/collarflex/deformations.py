"""Deformation schedules that keep scal > sigma while changing boundary data.

Every schedule is a finite list of stages.  A stage is a base collar
metric plus correction terms scaled by a parameter u in [0, 1]; at u = 0
the base object itself is returned, so s = 0 reproduces the input term
for term.  ``master`` chains two stages through the S1/S2
reparametrisations.

The numerical constants the existence statements leave open (C, delta,
support widths) are found by verified search: a candidate schedule is
built, swept on an (s, t, node) grid, and accepted only when the
sampled margin scal - sigma is strictly positive everywhere.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence

import numpy as np

from . import geometry as geo
from .collar import (
    CheckResult,
    CollarMetric,
    PreconditionError,
    VerificationError,
    c1_drift,
    c_normal_constant,
    check_boundary_condition,
    curvature_batch,
    digest,
    sample_ts,
)
from .cutoffs import S1, S2, chi_delta, linear_bump, plateau, quadratic_cap
from .geometry import SymTensorField
from .profiles import Poly, Product, Profile, Rescaled, Scaled, taylor_remainder
from .report import VerificationReport

log = logging.getLogger(__name__)

SUPPORT_HALVINGS = 12
DELTA_HALVINGS = 8
C_DOUBLINGS = 16
EXACT_TOL = 1e-12


# -- families ---------------------------------------------------------------------


def as_family(g) -> tuple[CollarMetric, ...]:
    fam = (g,) if isinstance(g, CollarMetric) else tuple(g)
    if not fam:
        raise PreconditionError("family must be nonempty")
    return fam


def _k_family(k, fam) -> tuple[SymTensorField, ...]:
    if isinstance(k, SymTensorField):
        return (k,) * len(fam)
    if isinstance(k, (int, float)):
        return tuple(float(k) * g.boundary_field(0) for g in fam)
    ks = tuple(k)
    if len(ks) != len(fam):
        raise PreconditionError("k family does not match the metric family")
    return ks


def _field(cm: CollarMetric, arr) -> SymTensorField:
    return SymTensorField(arr, cm.geometry.backend)


def second_ff0(cm: CollarMetric) -> SymTensorField:
    return _field(cm, -0.5 * cm.boundary_jets(1)[1])


# -- schedules --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Stage:
    base: CollarMetric
    corrections: tuple[tuple[Profile, SymTensorField], ...] = ()

    def at(self, u: float) -> CollarMetric:
        if u == 0.0 or not self.corrections:
            return self.base
        return self.base.plus(tuple((Scaled(float(u), p), A) for p, A in self.corrections))


@dataclass(eq=False)
class DeformationSchedule:
    op: str
    sigma: object
    stages: tuple[tuple[Stage, ...], ...]  # stages[i][member]
    constants: dict = field(default_factory=dict)
    tags: dict = field(default_factory=dict)
    report: VerificationReport | None = None

    @property
    def members(self) -> int:
        return len(self.stages[0])

    def locate(self, s: float) -> tuple[int, float]:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s = {s} outside [0, 1]")
        if len(self.stages) == 1:
            return 0, float(s)
        # two stages: u = 1 - S2(s) on [0, 1/2], u = 1 - S1(s) on [1/2, 1]
        if s <= 0.5:
            return 0, 1.0 - S2(s)
        return 1, 1.0 - S1(s)

    def metric(self, s: float, xi: int = 0) -> CollarMetric:
        i, u = self.locate(s)
        return self.stages[i][xi].at(u)

    def inputs(self) -> tuple[CollarMetric, ...]:
        return tuple(st.base for st in self.stages[0])

    def endpoint(self, xi: int = 0) -> CollarMetric:
        return self.metric(1.0, xi)

    def endpoints(self) -> tuple[CollarMetric, ...]:
        return tuple(self.endpoint(x) for x in range(self.members))

    def is_constant(self) -> bool:
        return all(not st.corrections for stage in self.stages for st in stage)


def _concat(op, sigma, first: DeformationSchedule, second: DeformationSchedule) -> DeformationSchedule:
    # second was built on first's endpoints, so the pieces agree at s = 1/2
    return DeformationSchedule(op, sigma, first.stages + second.stages, {**first.constants, **second.constants})


# -- verification -----------------------------------------------------------------


def verify_schedule(
    sched: DeformationSchedule,
    sigma,
    s_samples: int = 17,
    per_interval: int = 129,
    eps_slack: float = 0.0,
    strict_radius: float | None = None,
    checks: Sequence[CheckResult] = (),
    keep_trace: bool = True,
) -> VerificationReport:
    """Sweep (member, s, t, node) and record min(scal - sigma).

    With ``eps_slack > 0`` the strict test scal > sigma is only required on
    t <= strict_radius, and scal > sigma - eps_slack elsewhere.
    """
    ss = np.linspace(0.0, 1.0, s_samples)
    sig = np.asarray(sigma, dtype=float)
    worst = {"margin": np.inf}
    bad = False
    rows = {k: [] for k in ("s", "t", "min_scal", "H", "II_min_eig")}
    for xi in range(sched.members):
        ts = sample_ts(sched.endpoint(xi), per_interval)
        for s in ss:
            cb = curvature_batch(sched.metric(float(s), xi), ts)
            margin = cb["scal"] - sig
            i, j = np.unravel_index(np.argmin(margin), margin.shape)
            if margin[i, j] < worst["margin"]:
                worst = {"margin": float(margin[i, j]), "xi": xi, "s": float(s), "t": float(ts[i]), "node": int(j)}
            if eps_slack > 0.0 and strict_radius is not None:
                near = ts <= strict_radius
                bad |= bool(np.any(margin[near] <= 0.0)) or bool(np.any(margin[~near] <= -eps_slack))
            else:
                bad |= bool(np.any(margin <= 0.0))
            if keep_trace:
                rows["s"].append(np.full(ts.shape, s))
                rows["t"].append(ts)
                rows["min_scal"].append(cb["scal"].min(axis=1))
                rows["H"].append(cb["H"].min(axis=1))
                rows["II_min_eig"].append(cb["II_eigs"].min(axis=(1, 2)))
    scal_check = CheckResult("scal>sigma", not bad, max(0.0, -worst["margin"]), margin=worst["margin"])
    inputs = {
        "op": sched.op,
        "sigma": sig.tolist(),
        "inputs": [m.to_json() for m in sched.inputs()],
        "constants": {k: v for k, v in sched.constants.items()},
    }
    drift = {}
    try:
        drift["c1"] = max(c1_drift(a, b, per_interval) for a, b in zip(sched.inputs(), sched.endpoints()))
    except PreconditionError:
        pass
    return VerificationReport(
        inputs_digest=digest(inputs),
        sampling={"s_samples": s_samples, "t_per_interval": per_interval, "members": sched.members,
                  "eps_slack": eps_slack},
        min_margin=worst["margin"],
        worst=worst,
        checks=[scal_check, *checks],
        constants=dict(sched.constants),
        drift=drift,
        trace={k: np.concatenate(v) for k, v in rows.items()} if keep_trace else None,
    )


def _input_margin(fam, sigma, per_interval=129) -> float:
    out = np.inf
    for g in fam:
        cb = curvature_batch(g, sample_ts(g, per_interval))
        out = min(out, float(np.min(cb["scal"] - np.asarray(sigma, dtype=float))))
    return out


def _jet_gap(fam_a, fam_b, orders, expect=None) -> float:
    """max over members and orders of |jet_a - expect(jet_b)| in the g0 norm at t = 0."""
    r = 0.0
    for a, b in zip(fam_a, fam_b):
        Ja, Jb = a.boundary_jets(max(orders)), b.boundary_jets(max(orders))
        for l in orders:
            want = Jb[l] if expect is None else expect(l, Jb, b)
            r = max(r, float(np.max(geo.g_norm(Jb[0], Ja[l] - want, a.geometry.mult))))
    return r


# -- constants --------------------------------------------------------------------


def c0_step1(g) -> float:
    fam = as_family(g)
    n = fam[0].n
    best = 0.0
    for cm in fam:
        J = cm.boundary_jets(2)
        best = max(best, float(np.max(np.abs(geo.tr_against(J[0], J[2], cm.geometry.mult)))))
    return best / (2 * (n - 1))


def c0_normal(g0: SymTensorField, h: SymTensorField, sigma, geometry) -> float:
    if not np.all(geo.is_pos_def(g0.values)):
        raise PreconditionError("g0 is singular")
    mult, n = geometry.mult, geometry.n
    W = geo.inv(g0.values) @ h.values
    trW = geo.trace(W, mult)
    val = geometry.slice_scal(g0.values) - np.asarray(sigma, dtype=float) + 3 * geo.trace(W @ W, mult) - trW**2
    return float(-np.max(val) / (2 * (n - 1)))


def make_c_normal(g0: SymTensorField, h: SymTensorField, C: float, t_max: float, geometry) -> CollarMetric:
    """dt^2 + g0 - 2 t h - C t^2 g0."""
    terms = [(Poly((1.0,)), g0)]
    if not h.is_zero():
        terms.append((Poly((0.0, -2.0)), h))
    if C != 0.0:
        terms.append((Poly((0.0, 0.0, -float(C))), g0))
    cm = CollarMetric(geometry, t_max, tuple(terms))
    ts = np.linspace(0.0, t_max, 513)
    ok = geo.is_pos_def(cm.slices(ts, 0)[0])
    ok = ok.reshape(len(ts), -1).all(axis=1)
    if not ok.all():
        bad = ts[np.argmin(ok)]
        raise PreconditionError(f"slices degenerate at t = {bad:.6g}; shrink t_max to about {0.5 * bad:.6g}")
    return cm


# -- profiles used by the blends -------------------------------------------------


def two_scale_quadratic(tau: float, t1: float) -> Profile:
    """Equals t^2 on [0, tau], grows linearly past 2 tau, cut off on [t1/2, t1]."""
    return Product((Rescaled(quadratic_cap(), tau, tau * tau), Rescaled(plateau(), t1)))


def _default_ratio(margin, C, c0s, n):
    return min(0.25, margin / (150.0 * (n - 1) * (abs(C) + c0s + 1.0)))


def _start_support(fam, support):
    t_max = min(g.t_max for g in fam)
    t1 = t_max / 2 if support is None else min(float(support), t_max)
    return t1, t_max / 2**SUPPORT_HALVINGS


# -- c_normalize ------------------------------------------------------------------


def c_normalize(g, sigma, C: float | None = None, support: float | None = None, eps_slack: float = 0.0,
                ratio: float | None = None, budget: int = SUPPORT_HALVINGS, s_samples: int = 17,
                per_interval: int = 129, search: bool = True) -> DeformationSchedule:
    """g - s ((g0''/2 + C g0) q(t) + beta(t) R_t), R_t the part of g_t beyond its 2-jet.

    q is t^2 on a short inner layer and is cut off before t1; the layer
    width tau = ratio * t1 and t1 are halved together until the sweep
    passes.
    """
    fam = as_family(g)
    n = fam[0].n
    c0s = c0_step1(fam)
    C = c0s if C is None else float(C)
    m = _input_margin(fam, sigma, per_interval)
    if m <= 0:
        raise PreconditionError(f"input has scal <= sigma somewhere (margin {m:.3g})")
    pieces = []
    for cm in fam:
        J = cm.boundary_jets(2)
        Q2 = _field(cm, 0.5 * J[2] + C * J[0])
        rem = [(r, A) for p, A in cm.terms if (r := taylor_remainder(p)) is not None]
        pieces.append((Q2, rem))
    if C < c0s and any(not Q2.is_zero() for Q2, _ in pieces):
        raise PreconditionError(f"C = {C} below c0_step1 = {c0s}")
    t1, floor = _start_support(fam, support)
    rho = _default_ratio(m, C, c0s, n) if ratio is None else float(ratio)
    last = None
    for attempt in range(budget + 1 if search else 1):
        tau = rho * t1
        q = two_scale_quadratic(tau, t1)
        beta = Rescaled(plateau(), t1)
        stages = []
        for cm, (Q2, rem) in zip(fam, pieces):
            corr = []
            if not Q2.is_zero():
                corr.append((Scaled(-1.0, q), Q2))
            corr += [(Scaled(-1.0, Product((beta, r))), A) for r, A in rem]
            stages.append(Stage(cm, tuple(corr)))
        sched = DeformationSchedule(
            "c-normalize", sigma, (tuple(stages),),
            {"C": C, "c0_step1": c0s, "support": t1, "c_normal_radius": tau, "eps_slack": eps_slack},
            {"endpoint": f"C-normal on [0, {tau:.6g}]"},
        )
        checks = _c_normalize_checks(sched, C, tau)
        rep = verify_schedule(sched, sigma, s_samples, per_interval, eps_slack, t1 / 2, checks)
        sched.report = last = rep
        if rep.passed:
            return sched
        log.debug("c_normalize attempt %d failed (margin %.3g at t=%.3g)", attempt, rep.min_margin, rep.worst["t"])
        if sched.is_constant() or t1 / 2 < floor:
            break
        t1 /= 2
        rho /= 2
    raise VerificationError(f"c_normalize: no support width passed (last margin {last.min_margin:.3g})", last)


def _c_normalize_checks(sched, C, tau):
    ins = sched.inputs()
    grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    one_jet = max(_jet_gap([sched.metric(s, x) for x in range(sched.members)], ins, (0, 1)) for s in grid)
    second = max(
        _jet_gap([sched.metric(s, x) for x in range(sched.members)], ins, (2,),
                 lambda l, J, b, s=s: (1 - s) * J[2] - 2 * s * C * J[0])
        for s in grid
    )
    ends = sched.endpoints()
    cn = [check_boundary_condition(e, "c-normal", C=C, radius=tau) for e in ends]
    return [
        CheckResult("s0_identity", all(sched.metric(0.0, x) is ins[x] for x in range(sched.members)), 0.0),
        CheckResult("one_jet_preserved", one_jet == 0.0, one_jet),
        CheckResult("second_derivative_interpolation", second <= EXACT_TOL * (1 + abs(C)), second),
        CheckResult("endpoint_c_normal", all(c.passed for c in cn), max(c.residual for c in cn)),
    ]


# -- bend_II ----------------------------------------------------------------------


def bend_II(g, k, sigma, C: float | None = None, eps0: float | None = None, delta: float | None = None,
            budget: int = DELTA_HALVINGS, s_samples: int = 17, per_interval: int = 129) -> DeformationSchedule:
    """g + 2 s chi_delta(t) (h - k) on a C-normal family: II moves from h to k."""
    fam = as_family(g)
    ks = _k_family(k, fam)
    if C is None:
        C = float(c_normal_constant(fam[0])[0])
    for cm in fam:
        chk = check_boundary_condition(cm, "c-normal", C=C)
        if not chk.passed:
            raise PreconditionError(f"input is not {C}-normal (residual {chk.residual:.3g})")
    hs = [second_ff0(cm) for cm in fam]
    for cm, h, kk in zip(fam, hs, ks):
        g0 = cm.boundary_jets(0)[0]
        mult = cm.geometry.mult
        if np.any(geo.tr_against(g0, h.values, mult) < geo.tr_against(g0, kk.values, mult)):
            raise PreconditionError("trace condition tr(h) >= tr(k) violated")
    if _input_margin(fam, sigma, per_interval) <= 0:
        raise PreconditionError("input has scal <= sigma somewhere")
    eps0 = min(cm.t_max for cm in fam) if eps0 is None else eps0
    d = min(0.5, eps0**2, C**-2 if C > 0 else 0.5) if delta is None else float(delta)
    diffs = [h - kk for h, kk in zip(hs, ks)]
    last = None
    for attempt in range(budget + 1):
        chi = chi_delta(d).chi
        stages = tuple(Stage(cm, ((Scaled(2.0, chi), D),) if not D.is_zero() else ()) for cm, D in zip(fam, diffs))
        sched = DeformationSchedule(
            "bend", sigma, (stages,), {"C": C, "delta": d, "bend_support": sqrt(d)}, {"endpoint": "II = k"}
        )
        rep = verify_schedule(sched, sigma, s_samples, per_interval, checks=_bend_checks(sched, hs, ks))
        sched.report = last = rep
        if rep.passed:
            return sched
        log.debug("bend attempt %d (delta=%.3g) failed: margin %.3g", attempt, d, rep.min_margin)
        if sched.is_constant():
            break
        d /= 2
    raise VerificationError(f"bend_II: no delta passed at C = {C} (last margin {last.min_margin:.3g})", last)


def _ii_gap(metrics, targets) -> float:
    r = 0.0
    for cm, T in zip(metrics, targets):
        J = cm.boundary_jets(1)
        r = max(r, float(np.max(geo.g_norm(J[0], -0.5 * J[1] - T, cm.geometry.mult))))
    return r


def _bend_checks(sched, hs, ks, schedule_s=None):
    ss = np.linspace(0, 1, 17)
    ins = sched.inputs()
    bnd = max(_jet_gap([sched.metric(s, x) for x in range(sched.members)], ins, (0,)) for s in ss)
    interp = max(
        _ii_gap([sched.metric(s, x) for x in range(sched.members)],
                [(1 - s) * h.values + s * k.values for h, k in zip(hs, ks)])
        for s in ss
    )
    return [
        CheckResult("s0_identity", all(sched.metric(0.0, x) is ins[x] for x in range(sched.members)), 0.0),
        CheckResult("boundary_metric_constant", bnd == 0.0, bnd),
        CheckResult("II_interpolation", interp <= EXACT_TOL, interp),
    ]


# -- master -----------------------------------------------------------------------


def _start_C(fam, ks, sigma):
    c = c0_step1(fam)
    for cm, kk in zip(fam, ks):
        g0 = cm.boundary_field(0)
        c = max(c, c0_normal(g0, second_ff0(cm), sigma, cm.geometry), c0_normal(g0, kk, sigma, cm.geometry))
    return max(c, 0.0) + 1.0


def _existing_C(fam, ks):
    """Common C when every member is already C-normal with II = k, else None."""
    out = None
    for cm, kk in zip(fam, ks):
        C = c_normal_constant(cm)
        if np.any(np.isnan(C)) or np.ptp(C) > 0.0 or not np.array_equal(second_ff0(cm).values, kk.values):
            return None
        if out is not None and C[0] != out:
            return None
        if not check_boundary_condition(cm, "c-normal", C=float(C[0])).passed:
            return None
        out = float(C[0])
    return out


def _master_at(fam, ks, sigma, C, support, s_samples, per_interval):
    st1 = c_normalize(fam, sigma, C=C, support=support, s_samples=s_samples, per_interval=per_interval)
    tau = st1.constants["c_normal_radius"]
    st2 = bend_II(st1.endpoints(), ks, sigma, C=C, eps0=tau, s_samples=s_samples, per_interval=per_interval)
    return st1, st2


def master(g, k, sigma, C: float | None = None, support: float | None = None, s_samples: int = 17,
           per_interval: int = 129, c_budget: int = C_DOUBLINGS) -> DeformationSchedule:
    """C-normalise on s in [0, 1/2], then bend II to k on [1/2, 1]."""
    fam = as_family(g)
    ks = _k_family(k, fam)
    n = fam[0].n
    for cm, kk in zip(fam, ks):
        g0 = cm.boundary_jets(0)[0]
        mult = cm.geometry.mult
        H = geo.tr_against(g0, second_ff0(cm).values, mult) / (n - 1)
        if np.any(geo.tr_against(g0, kk.values, mult) / (n - 1) > H):
            raise PreconditionError("need tr(k)/(n-1) <= H pointwise")
    if C is None:
        C = _existing_C(fam, ks)
        C = _start_C(fam, ks, sigma) if C is None else C
    C = float(C)
    last = None
    for _ in range(c_budget + 1):
        try:
            st1, st2 = _master_at(fam, ks, sigma, C, support, s_samples, per_interval)
            break
        except VerificationError as e:
            log.debug("master: C = %.4g insufficient (%s)", C, e)
            last = e
            C *= 2
    else:
        raise VerificationError(f"master: C search exhausted ({last})", last.report if last else None)
    return _finish_master(fam, ks, sigma, st1, st2, s_samples, per_interval)


def _finish_master(fam, ks, sigma, st1, st2, s_samples, per_interval):
    sched = _concat("master", sigma, st1, st2)
    C = sched.constants["C"]
    hs = [second_ff0(cm) for cm in fam]
    ss = np.linspace(0, 1, 17)
    bnd = max(_jet_gap([sched.metric(s, x) for x in range(sched.members)], fam, (0,)) for s in ss)
    interp = max(
        _ii_gap([sched.metric(s, x) for x in range(sched.members)],
                [S1(s) * h.values + (1 - S1(s)) * k.values for h, k in zip(hs, ks)])
        for s in ss
    )
    ends = sched.endpoints()
    # chi_delta(t) = t below 0.07 delta, so the endpoint is exactly C-normal there
    cn = [check_boundary_condition(e, "c-normal", C=C, radius=0.07 * sched.constants["delta"]) for e in ends]
    ii_end = _ii_gap(ends, [k.values for k in ks])
    checks = [
        CheckResult("s0_identity", all(sched.metric(0.0, x) is fam[x] for x in range(sched.members)), 0.0),
        CheckResult("boundary_metric_constant", bnd == 0.0, bnd),
        CheckResult("II_interpolation", interp <= EXACT_TOL, interp),
        CheckResult("endpoint_II_equals_k", ii_end <= EXACT_TOL, ii_end),
        CheckResult("endpoint_c_normal", all(c.passed for c in cn), max(c.residual for c in cn)),
    ]
    sched.report = verify_schedule(sched, sigma, s_samples, per_interval, checks=checks)
    sched.tags = {"endpoint": "C-normal with II = k", "stages": ["c-normalize", "bend"]}
    return sched


def reverify(sched: DeformationSchedule, factor: int = 2) -> VerificationReport:
    """Re-run the sweep with denser sampling (verdict stability)."""
    rep = sched.report
    s = rep.sampling["s_samples"]
    t = rep.sampling["t_per_interval"]
    return verify_schedule(sched, sched.sigma, factor * (s - 1) + 1, factor * (t - 1) + 1, keep_trace=False)


# -- strict_push ------------------------------------------------------------------


def strict_push(g, s: float, delta: float, sigma, width: float | None = None, budget: int = SUPPORT_HALVINGS,
                s_samples: int = 17, per_interval: int = 129) -> DeformationSchedule:
    """g - u s delta psi(t) g0 for u in [0, 1]; psi(t) = t near 0, 0 past ``width``.

    At u = 1 the second fundamental form moves by s delta g0 / 2, so the
    normalised mean curvature moves by s delta / 2 and tr(II) by
    (n - 1) s delta / 2.
    """
    if not -1.0 <= s <= 1.0:
        raise ValueError("s must lie in [-1, 1]")
    fam = as_family(g)
    if _input_margin(fam, sigma, per_interval) <= 0:
        raise PreconditionError("input has scal <= sigma somewhere")
    width = min(g.t_max for g in fam) / 2 if width is None else width
    psi = linear_bump(width)
    d = float(delta)
    last = None
    for _ in range(budget + 1):
        stages = tuple(
            Stage(cm, ((Scaled(-s * d, psi), cm.boundary_field(0)),) if s != 0.0 else ()) for cm in fam
        )
        sched = DeformationSchedule("push", sigma, (stages,), {"delta": d, "s": s, "width": width},
                                    {"endpoint": "H shifted by s*delta/2"})
        rep = verify_schedule(sched, sigma, s_samples, per_interval)
        sched.report = last = rep
        if rep.passed:
            return sched
        if s == 0.0:
            break
        d /= 2
    raise VerificationError("strict_push: budget exhausted", last)


# -- cone_deform ------------------------------------------------------------------


def cone_deform(g, h0: float, sigma, sigma0, support: float | None = None, ratio: float | None = None,
                budget: int = SUPPORT_HALVINGS, s_samples: int = 17, per_interval: int = 129) -> DeformationSchedule:
    """g + s (C + h0^2) q(t) g0 on C-normal input with II = h0 g0.

    Near t = 0 the endpoint is (1 - t h0)^2 g0, i.e. of h0-cone type.
    """
    fam = as_family(g)
    n = fam[0].n
    Cs = []
    for cm in fam:
        C = c_normal_constant(cm)
        if np.any(np.isnan(C)) or np.ptp(C) > 1e-12 * (1 + np.abs(C).max()):
            raise PreconditionError("input is not C-normal")
        Cs.append(float(C[0]))
        if not check_boundary_condition(cm, "c-normal", C=Cs[-1]).passed:
            raise PreconditionError("input is not C-normal to fourth order")
        if not check_boundary_condition(cm, "II=h0", h0=h0).passed:
            raise PreconditionError(f"II is not {h0} g0")
    sig0 = np.asarray(sigma0, dtype=float)
    if np.any(sig0 < np.asarray(sigma, dtype=float) + (n - 1) * (n - 2) * h0**2):
        raise PreconditionError("need sigma0 >= sigma + (n-1)(n-2) h0^2")
    for cm in fam:
        if np.any(cm.geometry.slice_scal(cm.boundary_jets(0)[0]) <= sig0):
            raise PreconditionError("need scal(g0) > sigma0")
    m = _input_margin(fam, sigma, per_interval)
    if m <= 0:
        raise PreconditionError("input has scal <= sigma somewhere")
    t1, floor = _start_support(fam, support)
    rho = _default_ratio(m, max(abs(c) for c in Cs) + h0**2, 0.0, n) if ratio is None else ratio
    last = None
    for _ in range(budget + 1):
        tau = rho * t1
        q = two_scale_quadratic(tau, t1)
        stages = tuple(
            Stage(cm, ((Scaled(C + h0**2, q), cm.boundary_field(0)),) if C + h0**2 != 0.0 else ())
            for cm, C in zip(fam, Cs)
        )
        sched = DeformationSchedule("cone", sigma, (stages,),
                                    {"C": Cs, "h0": h0, "support": t1, "cone_radius": tau},
                                    {"endpoint": f"{h0}-cone type on [0, {tau:.6g}]"})
        rep = verify_schedule(sched, sigma, s_samples, per_interval, checks=_cone_checks(sched, h0))
        sched.report = last = rep
        if rep.passed:
            return sched
        if sched.is_constant() or t1 / 2 < floor:
            break
        t1 /= 2
        rho /= 2
    raise VerificationError("cone_deform: no support width passed", last)


def _cone_checks(sched, h0):
    n = sched.inputs()[0].n
    r = 0.0
    for x, g in enumerate(sched.inputs()):
        base = curvature_batch(g, [0.0])["scal"][0]
        g0 = g.boundary_jets(0)[0]
        target = g.geometry.slice_scal(g0) - (n - 1) * (n - 2) * h0**2
        for s in np.linspace(0, 1, 9):
            got = curvature_batch(sched.metric(float(s), x), [0.0])["scal"][0]
            r = max(r, float(np.max(np.abs(got - ((1 - s) * base + s * target)))))
    tau = sched.constants["cone_radius"]
    cone = [check_boundary_condition(e, "cone", h0=h0, radius=tau) for e in sched.endpoints()]
    return [
        CheckResult("boundary_scal_identity", r <= 1e-10, r),
        CheckResult("endpoint_cone_type", all(c.passed for c in cone), max(c.residual for c in cone)),
    ]


# -- desingularize ----------------------------------------------------------------


def matching_residual(e1: CollarMetric, e2: CollarMetric, orders=(0, 1, 2, 3)) -> float:
    """max_l |g1^(l)_0 - (-1)^l g2^(l)_0| in the g0 norm."""
    J1, J2 = e1.boundary_jets(max(orders)), e2.boundary_jets(max(orders))
    return max(float(np.max(geo.g_norm(J1[0], J1[l] - (-1) ** l * J2[l], e1.geometry.mult))) for l in orders)


def desingularize(g1, g2, sigma, C: float | None = None, support: float | None = None, s_samples: int = 17,
                  per_interval: int = 129, c_budget: int = C_DOUBLINGS):
    """Smooth a corner between two collars glued along their common boundary."""
    f1, f2 = as_family(g1), as_family(g2)
    if len(f1) != len(f2):
        raise PreconditionError("families differ in size")
    for a, b in zip(f1, f2):
        if a.geometry != b.geometry:
            raise PreconditionError("collars live over different boundaries")
        A, B = a.boundary_jets(0)[0], b.boundary_jets(0)[0]
        if np.max(np.abs(A - B)) > EXACT_TOL * (1 + np.max(np.abs(A))):
            raise PreconditionError("boundary metrics differ")
        n, mult = a.n, a.geometry.mult
        Hs = [geo.tr_against(A, second_ff0(c).values, mult) / (n - 1) for c in (a, b)]
        if np.any(Hs[0] + Hs[1] < 0):
            raise PreconditionError(f"corner is not mean convex (min H1 + H2 = {np.min(Hs[0] + Hs[1]):.4g})")
    k1 = tuple(-second_ff0(b) for b in f2)
    k2 = tuple(second_ff0(b) for b in f2)
    if C is None:
        c1, c2 = _existing_C(f1, k1), _existing_C(f2, k2)
        C = c1 if c1 is not None and c1 == c2 else max(_start_C(f1, k1, sigma), _start_C(f2, k2, sigma))
    last = None
    for _ in range(c_budget + 1):
        try:
            a1, b1 = _master_at(f1, k1, sigma, C, support, s_samples, per_interval)
            a2, b2 = _master_at(f2, k2, sigma, C, support, s_samples, per_interval)
            break
        except VerificationError as e:
            last = e
            C *= 2
    else:
        raise VerificationError(f"desingularize: C search exhausted ({last})", last.report if last else None)
    s1 = _finish_master(f1, k1, sigma, a1, b1, s_samples, per_interval)
    s2 = _finish_master(f2, k2, sigma, a2, b2, s_samples, per_interval)
    res = max(matching_residual(e1, e2) for e1, e2 in zip(s1.endpoints(), s2.endpoints()))
    for sch in (s1, s2):
        sch.op = "desingularize"
        sch.report.checks.append(CheckResult("smooth_matching", res <= 1e-9, res))
    return s1, s2
