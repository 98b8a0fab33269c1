"""Scenario catalog and end-to-end pipelines.

A scenario bundles collar metrics, closed-form facts about them (each with
a provenance tag) and a recipe: an ordered list of operations. Facts are
re-checked when the scenario is built, before any pipeline can run.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from math import pi, sin, tan
from pathlib import Path

import numpy as np

from . import deformations as dfm
from .collar import (
    CollarMetric,
    PreconditionError,
    check_boundary_condition,
    curvature_batch,
    digest,
)
from .geometry import FlatTorus, RoundSphere
from .profiles import Poly, cos_sq, sin_sq
from .report import VerificationReport

FACT_TOL = 1e-9


class ScenarioError(RuntimeError):
    """A catalog fact failed its load-time check."""


@dataclass(frozen=True)
class Fact:
    """``quantity`` is one of scal (sampled over the collar), H, II_over_g0, boundary_scale."""

    quantity: str
    expected: float
    provenance: str
    member: int = 0


@dataclass
class Scenario:
    name: str
    params: dict
    collars: tuple[CollarMetric, ...]
    facts: tuple[Fact, ...]
    recipe: tuple[tuple[str, dict], ...]
    sigma: float
    notes: str = ""
    verified: dict = field(default_factory=dict)

    def __post_init__(self):
        self.verified = verify_facts(self)

    def to_json(self):
        return {
            "name": self.name,
            "params": self.params,
            "sigma": self.sigma,
            "facts": [
                {"quantity": f.quantity, "expected": f.expected, "provenance": f.provenance,
                 "member": f.member, "residual": self.verified[i]}
                for i, f in enumerate(self.facts)
            ],
            "recipe": [{"op": op, **kw} for op, kw in self.recipe],
            "notes": self.notes,
        }


def _measure(cm: CollarMetric, quantity: str) -> np.ndarray:
    if quantity == "scal":
        ts = np.linspace(0.0, cm.t_max * (1 - 1e-9), 33)
        return curvature_batch(cm, ts)["scal"]
    cb = curvature_batch(cm, [0.0])
    if quantity == "H":
        return cb["H"]
    if quantity == "II_over_g0":
        return cb["II_eigs"]
    if quantity == "boundary_scale":
        return cb["G"][..., 0, 0]
    raise ValueError(f"unknown fact quantity {quantity!r}")


def verify_facts(sc: Scenario) -> dict:
    out = {}
    for i, f in enumerate(sc.facts):
        got = _measure(sc.collars[f.member], f.quantity)
        r = float(np.max(np.abs(got - f.expected)))
        if not r <= FACT_TOL:
            raise ScenarioError(f"{sc.name}: {f.quantity} = {f.expected} fails by {r:.3g} ({f.provenance})")
        out[i] = r
    return out


# -- collars ---------------------------------------------------------------------


def cap_collar(n: int, r: float) -> CollarMetric:
    """Geodesic ball of radius r in the unit sphere: slices sin^2(r - t) g_round."""
    if not 0 < r < pi:
        raise PreconditionError("cap radius must lie in (0, pi)")
    S = RoundSphere(n - 1)
    return CollarMetric(S, r / 2, ((sin_sq(-1.0, r), S.unit()),))


def spherical_cap(n: int = 3, r: float = pi / 3, eps: float = 0.1) -> Scenario:
    sigma = n * (n - 1) - eps
    return Scenario(
        "spherical_cap", {"n": n, "r": r}, (cap_collar(n, r),),
        (
            Fact("scal", n * (n - 1), "closed form: unit sphere"),
            Fact("H", 1 / tan(r), "closed form: cot r"),
            Fact("boundary_scale", sin(r) ** 2, "closed form: boundary radius sin r"),
        ),
        (("master", {"k": 0.0}),),
        sigma,
        "sigma sits eps below the closed-form scal to exercise strictness",
    )


def hemisphere(n: int = 3, eps: float = 0.1) -> Scenario:
    S = RoundSphere(n - 1)
    cm = CollarMetric(S, pi / 4, ((cos_sq(1.0, 0.0), S.unit()),))
    return Scenario(
        "hemisphere", {"n": n}, (cm,),
        (
            Fact("scal", n * (n - 1), "closed form: unit sphere"),
            Fact("H", 0.0, "closed form: totally geodesic equator"),
            Fact("II_over_g0", 0.0, "closed form: totally geodesic equator"),
        ),
        (("verify", {"condition": "doubling"}), ("c-normalize", {})),
        n * (n - 1) - eps,
        "slices cos^2 t are even in t, so the doubling predicate holds",
    )


def flat_cone(n: int = 3, eps: float = 0.1) -> Scenario:
    """Unit Euclidean ball seen from its boundary: slices (1 - t)^2 g_round."""
    S = RoundSphere(n - 1)
    cm = CollarMetric(S, 0.5, ((Poly((1.0, -2.0, 1.0)), S.unit()),))
    return Scenario(
        "flat_cone", {"n": n}, (cm,),
        (
            Fact("scal", 0.0, "Euclidean"),
            Fact("II_over_g0", 1.0, "Euclidean: unit sphere has II = g0"),
            Fact("H", 1.0, "Euclidean"),
        ),
        (("master", {"k": "II"}),),
        -eps,
        "master with k = II: the bend stage is constant",
    )


def product_cylinder_scenario(n: int = 3, scale: float = 1.0, eps: float = 0.1) -> Scenario:
    S = RoundSphere(n - 1)
    cm = CollarMetric(S, 0.5, ((Poly((1.0,)), scale * S.unit()),))
    return Scenario(
        "product_cylinder", {"n": n, "scale": scale}, (cm,),
        (
            Fact("scal", (n - 1) * (n - 2) / scale, "product"),
            Fact("H", 0.0, "product"),
            Fact("II_over_g0", 0.0, "product"),
        ),
        (("verify", {"condition": "doubling"}), ("c-normalize", {})),
        (n - 1) * (n - 2) / scale - eps,
    )


def corner_two_caps(n: int = 3, r: float = pi / 3) -> Scenario:
    cm = cap_collar(n, r)
    return Scenario(
        "corner_two_caps", {"n": n, "r": r}, (cm, cm),
        (
            Fact("H", 1 / tan(r), "closed form: cot r", 0),
            Fact("H", 1 / tan(r), "closed form: cot r", 1),
        ),
        (("desingularize", {}),),
        0.0,
        "two caps glued along their boundary; H1 + H2 = 2 cot r",
    )


def minoo_step2(n: int = 3, eps: float = 0.1, r: float = pi / 3) -> Scenario:
    sc = spherical_cap(n, r, eps)
    sc.name = "minoo_step2"
    sc.params = {"n": n, "eps": eps, "r": r}
    sc.recipe = (("master", {"k": 0.0}), ("verify", {"condition": "doubling", "on": "endpoint"}))
    sc.notes = ("cap input stands in for the step-1 metric; sigma = n(n-1) - eps, "
                "the literal sigma = n(n-1) case needs an external input metric")
    return sc


def flat_torus_collar(n: int = 3, resolution: int = 8, eps: float = 0.1) -> Scenario:
    T = FlatTorus(n - 1, (1.0,) * (n - 1), resolution)
    cm = CollarMetric(T, 0.5, ((Poly((1.0,)), T.unit()),))
    return Scenario(
        "flat_torus_collar", {"n": n, "resolution": resolution}, (cm,),
        (
            Fact("scal", 0.0, "flat with totally geodesic boundary"),
            Fact("II_over_g0", 0.0, "flat with totally geodesic boundary"),
        ),
        (("verify", {"condition": "doubling"}), ("c-normalize", {})),
        -eps,
    )


BUILDERS = {
    "spherical_cap": spherical_cap,
    "hemisphere": hemisphere,
    "flat_cone": flat_cone,
    "product_cylinder": product_cylinder_scenario,
    "corner_two_caps": corner_two_caps,
    "minoo_step2": minoo_step2,
    "flat_torus_collar": flat_torus_collar,
}


def catalog() -> list[Scenario]:
    return [b() for b in BUILDERS.values()]


def build(name: str, **params) -> Scenario:
    try:
        return BUILDERS[name](**params)
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(BUILDERS)}") from None


# -- pipelines ---------------------------------------------------------------------


@dataclass
class PipelineResult:
    scenario: str
    reports: dict  # step name -> VerificationReport
    schedules: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())


def _k_arg(k, cm):
    if k == "II":
        return dfm.second_ff0(cm)
    return float(k)


def _check_report(sc: Scenario, cm: CollarMetric, condition: str, **kw) -> VerificationReport:
    chk = check_boundary_condition(cm, condition, **kw)
    return VerificationReport(
        inputs_digest=digest({"scenario": sc.name, "metric": cm.to_json(), "condition": condition}),
        sampling={}, min_margin=chk.margin, worst={}, checks=[chk],
    )


def run_pipeline(sc: Scenario, overrides: dict | None = None, samples: tuple[int, int] = (17, 129)) -> PipelineResult:
    """Run the recipe. ``overrides`` may set sigma, C, support or k."""
    ov = dict(overrides or {})
    sigma = ov.pop("sigma", sc.sigma)
    s_samples, per_interval = samples
    out = PipelineResult(sc.name, {})
    last = None
    for i, (op, kw) in enumerate(sc.recipe):
        kw = {**kw, **{k: v for k, v in ov.items() if k in ("C", "support", "k")}}
        step = f"{i}-{op}"
        if op == "verify":
            cm = last.endpoint() if kw.get("on") == "endpoint" and last is not None else sc.collars[0]
            out.reports[step] = _check_report(sc, cm, kw["condition"])
            continue
        common = {"s_samples": s_samples, "per_interval": per_interval}
        if op == "master":
            cm = sc.collars[0]
            sched = dfm.master(cm, _k_arg(kw.get("k", 0.0), cm), sigma, C=kw.get("C"), support=kw.get("support"),
                               **common)
        elif op == "c-normalize":
            sched = dfm.c_normalize(sc.collars[0], sigma, C=kw.get("C"), support=kw.get("support"), **common)
        elif op == "desingularize":
            sched, other = dfm.desingularize(sc.collars[0], sc.collars[1], sigma, C=kw.get("C"),
                                             support=kw.get("support"), **common)
            out.reports[step], out.schedules[step] = sched.report, sched
            step = f"{step}-second"
            sched = other
        else:
            raise ValueError(f"unknown recipe step {op!r}")
        out.reports[step] = sched.report
        out.schedules[step] = sched
        last = sched
    return out


def write_outputs(res: PipelineResult, out_dir, fmt: str = "json") -> list[Path]:
    """One report per step: JSON, or the CSV trace with ``fmt == 'csv'``."""
    base = Path(out_dir) / res.scenario
    base.mkdir(parents=True, exist_ok=True)
    paths = []
    for step, rep in res.reports.items():
        if fmt == "csv":
            p = base / f"{step}.csv"
            p.write_text(rep.to_csv())
        else:
            p = base / f"{step}.json"
            p.write_text(rep.dumps())
        paths.append(p)
    return paths


def default_out_dir() -> Path:
    return Path(os.environ.get("COLLARFLEX_OUT_DIR", "collarflex-out"))


# -- drift study --------------------------------------------------------------------


def drift_ratio(sc: Scenario, sigma: float | None = None, per_interval: int = 129) -> dict:
    """C1 drift of c_normalize at the accepted support t1 and at t1/2 (same C and layer ratio)."""
    cm = sc.collars[0]
    sigma = sc.sigma if sigma is None else sigma
    C = dfm.c0_step1(cm) + 1.0
    first = dfm.c_normalize(cm, sigma, C=C, per_interval=per_interval)
    t1 = first.constants["support"]
    ratio = first.constants["c_normal_radius"] / t1
    second = dfm.c_normalize(cm, sigma, C=C, support=t1 / 2, ratio=ratio, search=False, per_interval=per_interval)
    d1, d2 = first.report.drift["c1"], second.report.drift["c1"]
    return {"scenario": sc.name, "C": C, "t1": t1, "drift_t1": d1, "drift_half": d2,
            "ratio": d2 / d1 if d1 > 0 else 0.0}

