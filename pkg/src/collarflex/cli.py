"""Command-line interface.

Exit codes: 0 when every check passes, 1 when a verification fails, 2 on a
precondition or input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import deformations as dfm
from . import karea, scenarios, yamabe
from .collar import (
    CheckResult,
    CollarMetric,
    PreconditionError,
    VerificationError,
    c_normal_constant,
    check_boundary_condition,
    curvature_batch,
    digest,
    sample_ts,
)
from .cutoffs import check_chi_family, chi_csv, chi_delta
from .geometry import GeometryError
from .report import VerificationReport

EXIT_OK, EXIT_FAIL, EXIT_PRE = 0, 1, 2

GLOBAL_DEFAULTS = {"seed": 0, "samples": "17,129", "out_dir": None, "format": "json", "verbose": False}


def _global_flags() -> argparse.ArgumentParser:
    # defaults are suppressed so flags may appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    g.add_argument("--samples", default=argparse.SUPPRESS,
                   help="verification grid as S or S,T: s-samples and t-points per interval (default 17,129)")
    g.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS,
                   help="output directory (default $COLLARFLEX_OUT_DIR or ./collarflex-out)")
    g.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS, help="output format")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def _samples(args) -> tuple[int, int]:
    parts = [int(x) for x in str(args.samples).split(",")]
    s = parts[0]
    t = parts[1] if len(parts) > 1 else 129
    if s < 2 or t < 3:
        raise PreconditionError("--samples needs at least 2 s-samples and 3 t-points")
    return s, t


def _out_dir(args) -> Path:
    return Path(args.out_dir) if args.out_dir else scenarios.default_out_dir()


def _emit(text: str, path: str | None):
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(rep: VerificationReport, args):
    if args.report:
        _emit(rep.dumps(), args.report)
    if getattr(args, "csv", None):
        _emit(rep.to_csv(), args.csv)
    if not args.report and not getattr(args, "csv", None):
        _emit(rep.to_csv() if args.format == "csv" else rep.dumps(), None)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=str) + "\n"


# -- inputs -----------------------------------------------------------------------


def _load_metric(path) -> CollarMetric:
    with open(path) as fh:
        return CollarMetric.from_json(json.load(fh))


def _inputs(args) -> list[CollarMetric]:
    if args.metric:
        out = [_load_metric(args.metric)]
        if getattr(args, "metric2", None):
            out.append(_load_metric(args.metric2))
        return out
    return list(scenarios.build(args.scenario).collars)


def _sigma(args, default):
    return default if args.sigma is None else args.sigma


def _k(args, cm):
    if args.k is None or args.k == "0":
        return 0.0
    if args.k == "II":
        return dfm.second_ff0(cm)
    return float(args.k)


# -- commands -----------------------------------------------------------------------


def cmd_catalog(args) -> int:
    cat = scenarios.catalog()
    if args.name:
        cat = [s for s in cat if s.name == args.name]
        if not cat:
            raise PreconditionError(f"unknown scenario {args.name!r}")
    _emit(_dump([s.to_json() for s in cat]), None)
    return EXIT_OK


def cmd_deform(args) -> int:
    s_samples, per_interval = _samples(args)
    common = {"s_samples": s_samples, "per_interval": per_interval}
    default_sigma = scenarios.build(args.scenario).sigma if not args.metric else None
    sigma = _sigma(args, default_sigma)
    if sigma is None:
        raise PreconditionError("--sigma is required with --metric")
    fam = _inputs(args)
    cm = fam[0]
    op = args.op
    if op == "master":
        sched = dfm.master(cm, _k(args, cm), sigma, C=args.capital_c, support=args.support, **common)
    elif op == "c-normalize":
        sched = dfm.c_normalize(cm, sigma, C=args.capital_c, support=args.support, eps_slack=args.eps_slack, **common)
    elif op == "bend":
        sched = dfm.bend_II(cm, _k(args, cm), sigma, C=args.capital_c, **common)
    elif op == "push":
        sched = dfm.strict_push(cm, args.s, args.delta, sigma, width=args.support, **common)
    elif op == "cone":
        if args.sigma0 is None:
            raise PreconditionError("cone needs --sigma0")
        sched = dfm.cone_deform(cm, args.h0, sigma, args.sigma0, support=args.support, **common)
    elif op == "desingularize":
        if len(fam) < 2:
            raise PreconditionError("desingularize needs two collars (--metric and --metric2, or a two-collar scenario)")
        sched, other = dfm.desingularize(fam[0], fam[1], sigma, C=args.capital_c, support=args.support, **common)
        if not other.report.passed:
            _emit_report(other.report, args)
            return EXIT_FAIL
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(op)
    if args.reverify:
        again = dfm.reverify(sched)
        sched.report.checks.append(
            CheckResult("reverify_double_sampling", again.passed, max(0.0, -again.min_margin),
                        margin=again.min_margin)
        )
    _emit_report(sched.report, args)
    return EXIT_OK if sched.report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    fam = _inputs(args)
    cm = fam[0]
    checks = []
    for cond in args.condition or ["doubling"]:
        kw = {"h0": args.h0, "radius": args.radius}
        if cond == "c-normal":
            kw["C"] = args.capital_c if args.capital_c is not None else float(np.nanmean(c_normal_constant(cm)))
        if cond.endswith("k"):
            k = _k(args, cm)
            kw["k"] = k * cm.boundary_field(0) if isinstance(k, float) else k
        checks.append(check_boundary_condition(cm, cond, **kw))
    worst, margin = {}, None
    if args.sigma is not None:
        ts = sample_ts(cm, _samples(args)[1])
        m = curvature_batch(cm, ts)["scal"] - args.sigma
        i, j = np.unravel_index(np.argmin(m), m.shape)
        margin = float(m[i, j])
        worst = {"t": float(ts[i]), "node": int(j), "margin": margin}
        checks.insert(0, CheckResult("scal>sigma", margin > 0, max(0.0, -margin), margin=margin))
    if margin is None:
        margin = min((c.margin for c in checks if c.margin is not None), default=None)
    rep = VerificationReport(digest({"metric": cm.to_json(), "conditions": args.condition, "sigma": args.sigma}),
                             {"t_per_interval": _samples(args)[1]}, margin, worst, checks)
    _emit_report(rep, args)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_yamabe(args) -> int:
    prof = yamabe.parse_profile(args.profile)
    out, p, pair, rep = yamabe.solve(prof, args.n, args.grid)
    if args.csv:
        _emit(yamabe.profile_csv(p, pair, rep), args.csv)
    if args.report:
        _emit(_dump(out), args.report)
    if not args.report and not args.csv:
        _emit(yamabe.profile_csv(p, pair, rep) if args.format == "csv" else _dump(out), None)
    return EXIT_OK if out["pass"] else EXIT_FAIL


def _default_demo_model(m: int):
    model = karea.truncated_polynomial_model(1, 1, "x1")
    for i in range(2, m + 1):
        model = karea.tensor_model(model, karea.truncated_polynomial_model(1, 1, f"x{i}"))
    return model


def cmd_karea(args) -> int:
    if args.kind == "demo":
        if args.model:
            model, ch, omega = karea.load_model(args.model)
        else:
            model, ch, omega = _default_demo_model(args.m), None, None
        if args.m is not None and args.model and model.m != args.m:
            raise PreconditionError(f"--m {args.m} does not match the model (m = {model.m})")
        if ch is None:
            x = tuple(karea.Fraction(1) if g == 2 else karea.Fraction(0) for g in model.degrees)
            ch = karea.exp_character(model, x)
        omega = model.one() if omega is None else omega
        res = karea.nonvanishing_grid_search(model, omega, ch)
        interp = karea.interpolate_grid(karea.grid_values(model, omega, ch), model.m)
        tot = karea.total_ch_nonzero(model, ch)
        out = {
            "m": model.m,
            "model": model.to_json(),
            "ch": ch.to_json(),
            "chern_numbers": {"+".join(map(str, k)): str(v) for k, v in karea.chern_numbers(ch).items()},
            "grid_search": {"k": list(res.k), "P": str(res.value), "evaluated": res.evaluated},
            "interpolation": {"degree": interp.degree, "reproduces": interp.reproduces},
            "total_ch": {"k": list(tot.k), "integral": str(tot.integral), "sign": tot.sign, "rank": tot.rank},
        }
        ok = interp.reproduces and interp.degree <= model.m
        out["pass"] = ok
        _emit(_dump(out), args.report)
        return EXIT_OK if ok else EXIT_FAIL
    ns = (args.n,) if args.n else (2, 4)
    for n in ns:
        if n % 2 or not 2 <= n <= 6:
            raise PreconditionError("--n must be even and at most 6")
    out = karea.ke_suite(args.trials, args.seed, ns, args.rank)
    out["pass"] = out["violations"] == 0
    _emit(_dump(out), args.report)
    return EXIT_OK if out["pass"] else EXIT_FAIL


def cmd_run(args) -> int:
    names = [args.scenario] if args.scenario != "all" else list(scenarios.BUILDERS)
    overrides = {k: v for k, v in (("sigma", args.sigma), ("C", args.capital_c), ("support", args.support))
                 if v is not None}
    out_dir = _out_dir(args)
    summary, ok = {}, True
    for name in names:
        sc = scenarios.build(name)
        res = scenarios.run_pipeline(sc, overrides, _samples(args))
        paths = scenarios.write_outputs(res, out_dir, args.format)
        summary[name] = {"pass": res.passed, "files": [str(p) for p in paths],
                         "steps": {k: r.passed for k, r in res.reports.items()}}
        ok &= res.passed
    _emit(_dump(summary), None)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_cutoffs(args) -> int:
    fam = chi_delta(args.delta)
    if args.csv:
        _emit(chi_csv(args.delta), args.csv)
    res = check_chi_family(args.delta)
    out = {"delta": args.delta, "c0": fam.c0,
           "checks": {k: {"pass": bool(v[0]), "worst": float(v[1])} for k, v in res.items()}}
    out["pass"] = all(v[0] for v in res.values())
    if args.format == "csv" and not args.csv:
        _emit(chi_csv(args.delta), None)
    else:
        _emit(_dump(out), args.report)
    return EXIT_OK if out["pass"] else EXIT_FAIL


# -- parser -----------------------------------------------------------------------


def _source_flags(p, two=False):
    p.add_argument("--scenario", default="spherical_cap", choices=sorted(scenarios.BUILDERS),
                   help="catalog scenario supplying the input collar(s)")
    p.add_argument("--metric", help="collar metric JSON instead of a scenario")
    if two:
        p.add_argument("--metric2", help="second collar metric JSON (desingularize)")


def build_parser() -> argparse.ArgumentParser:
    glob = _global_flags()
    root = argparse.ArgumentParser(prog="collarflex", parents=[glob], allow_abbrev=False,
                                   description="Collar metrics, boundary deformations, Yamabe-Robin and K-area checks.")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", parents=[glob], allow_abbrev=False, help="list catalog scenarios with their verified facts")
    p.add_argument("--name")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("deform", parents=[glob], allow_abbrev=False, help="build and verify a deformation schedule")
    p.add_argument("op", choices=("master", "c-normalize", "bend", "push", "cone", "desingularize"))
    _source_flags(p, two=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--k", help="target second fundamental form: a multiple of g0, or II")
    p.add_argument("--capital-c", dest="capital_c", type=float)
    p.add_argument("--support", type=float)
    p.add_argument("--eps-slack", dest="eps_slack", type=float, default=0.0)
    p.add_argument("--s", type=float, default=1.0, help="push direction in [-1, 1]")
    p.add_argument("--delta", type=float, default=0.01, help="push size")
    p.add_argument("--h0", type=float, default=0.0)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--reverify", action="store_true", help="repeat the sweep at double sampling")
    p.add_argument("--report")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("verify", parents=[glob], allow_abbrev=False, help="check boundary predicates on a collar")
    _source_flags(p)
    p.add_argument("--condition", action="append",
                   choices=("H>=", "H=", "II>=h0", "II=h0", "II>=k", "II=k", "c-normal", "cone", "doubling"))
    p.add_argument("--h0", type=float, default=0.0)
    p.add_argument("--k")
    p.add_argument("--capital-c", dest="capital_c", type=float)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--sigma", type=float)
    p.add_argument("--report")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("yamabe", parents=[glob], allow_abbrev=False, help="first eigenpair of the Yamabe operator with Robin condition")
    p.add_argument("--profile", default="flatball", help="flatball | cap:r | annulus:a,b | product:c,L")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--grid", type=int, default=2048)
    p.add_argument("--report")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_yamabe)

    p = sub.add_parser("karea", parents=[glob], allow_abbrev=False, help="Chern-character grid search and Clifford bound")
    ks = p.add_subparsers(dest="kind", required=True)
    d = ks.add_parser("demo", parents=[glob], allow_abbrev=False)
    d.add_argument("--m", type=int, default=2)
    d.add_argument("--model")
    d.add_argument("--report")
    d.set_defaults(func=cmd_karea)
    k = ks.add_parser("ke", parents=[glob], allow_abbrev=False)
    k.add_argument("--n", type=int)
    k.add_argument("--rank", type=int, default=3)
    k.add_argument("--trials", type=int, default=1000)
    k.add_argument("--report")
    k.set_defaults(func=cmd_karea)

    p = sub.add_parser("run", parents=[glob], allow_abbrev=False, help="run scenario pipelines and write reports")
    p.add_argument("--scenario", default="all", choices=["all", *sorted(scenarios.BUILDERS)])
    p.add_argument("--sigma", type=float)
    p.add_argument("--capital-c", dest="capital_c", type=float)
    p.add_argument("--support", type=float)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cutoffs", parents=[glob], allow_abbrev=False, help="check the cutoff family and dump it")
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_cutoffs)
    return root


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for key, val in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (PreconditionError, GeometryError, karea.ModelError, scenarios.ScenarioError) as e:
        print(f"precondition error: {e}", file=sys.stderr)
        return EXIT_PRE
    except VerificationError as e:
        print(f"verification failed: {e}", file=sys.stderr)
        if e.report is not None and getattr(args, "report", None):
            _emit(e.report.dumps(), args.report)
        return EXIT_FAIL
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_PRE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
