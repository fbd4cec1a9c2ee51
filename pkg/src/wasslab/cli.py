"""Command-line front end.

One subcommand per capability: `wp` (distances), `geodesic` (interpolation),
`busemann`, `slope`, `check-viscosity`, `descend` (all driven by a JSON
config), `reproduce` for the named scenarios, and `acceptance` for the full
criteria battery. Exit code 0 means every expected verdict matched.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .discrete_measure import DiscreteMeasure
from .errors import DescentStalled, WasslabError
from .ot_exact import wasserstein_exact
from .scenarios import ScenarioConfig, emit_report, load_measures, run_scenario
from .viscosity import (
    dlg_test,
    global_slope_estimate,
    greedy_descent,
    lifted_ray,
    local_slope_estimate,
    measure_field_from_config,
    viscosity_sphere_test,
)
from .wgeom import busemann_estimate, displacement_path


def _print_json(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _load_config(path: str) -> dict:
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise WasslabError(f"{path}: config must be a JSON object")
    return cfg


def _measure(cfg: dict, key: str) -> DiscreteMeasure:
    if key not in cfg:
        raise WasslabError(f"config is missing the {key!r} measure")
    return DiscreteMeasure.from_json_dict(cfg[key])


def _cmd_wp(args) -> int:
    measures = load_measures(args.measures)
    i, j = args.i, args.j
    res = wasserstein_exact(measures[i], measures[j], args.p)
    _print_json(res.to_json_dict())
    return 0


def _cmd_geodesic(args) -> int:
    measures = load_measures(args.measures)
    # report mode: construction re-certifies endpoints and constant speed
    path = displacement_path(measures[args.i], measures[args.j], args.p, check=True)
    t = args.t if args.t is not None else args.frac * path.length
    out = {
        "length": path.length,
        "t": t,
        "degenerate": path.degenerate,
        "nonunique": path.nonunique,
        "measure": path.eval(t).to_json_dict(),
    }
    _print_json(out)
    return 0


def _cmd_busemann(args) -> int:
    cfg = _load_config(args.config)
    U = measure_field_from_config(cfg["field"], args.p)
    ray = lifted_ray(U, _measure(cfg, "start"))
    est = busemann_estimate(ray, _measure(cfg, "omega"),
                            tol=float(cfg.get("tol", args.tol)),
                            t_max=float(cfg.get("t_max", 1e6)))
    _print_json({
        "op": "busemann",
        "value": est.value,
        "truncation": est.truncation,
        "tail_gap": est.tail_gap,
        "converged": est.converged,
        "trace": [[t, g] for t, g in est.samples],
        "caveat": est.caveat,
    })
    return 0


def _cmd_slope(args) -> int:
    cfg = _load_config(args.config)
    U = measure_field_from_config(cfg["field"], args.p)
    omega = _measure(cfg, "omega")
    local = local_slope_estimate(U, omega,
                                 radii=tuple(cfg.get("radii", (1.0, 0.5, 0.25))),
                                 budget=int(cfg.get("budget", 8)), rng=args.seed)
    out = {"op": "slope", "local": local.value}
    if "dictionary" in cfg:
        dictionary = [DiscreteMeasure.from_json_dict(m) for m in cfg["dictionary"]]
        out["global"] = global_slope_estimate(U, omega, dictionary).value
    _print_json(out)
    return 0


def _cmd_check_viscosity(args) -> int:
    cfg = _load_config(args.config)
    U = measure_field_from_config(cfg["field"], args.p)
    res = viscosity_sphere_test(U, _measure(cfg, "omega"),
                                radii=tuple(cfg.get("radii", (1.0, 0.5, 0.1))),
                                eps=float(cfg.get("eps", 1e-3)),
                                budget=int(cfg.get("budget", 8)), rng=args.seed)
    _print_json(res.to_json_dict())
    if "levels" in cfg:
        dlg = dlg_test(U, _measure(cfg, "omega"), levels=cfg["levels"],
                       budget=int(cfg.get("budget", 8)), rng=args.seed)
        _print_json(dlg.to_json_dict())
    return 0 if res.verdict == "PASS" else 1


def _cmd_descend(args) -> int:
    cfg = _load_config(args.config)
    U = measure_field_from_config(cfg["field"], args.p)
    try:
        poly = greedy_descent(U, _measure(cfg, "omega"),
                              eps=float(cfg.get("epsilon", 1e-2)),
                              steps=int(cfg.get("steps", 20)),
                              step_length=float(cfg.get("step_length", 1.0)),
                              budget=int(cfg.get("budget", 8)), rng=args.seed)
    except DescentStalled as exc:
        _print_json({"op": "descend", "stalled_at_step": exc.step,
                     "best_gap": exc.best_gap})
        return 1
    _print_json({
        "op": "descend",
        "times": list(poly.times),
        "values": list(poly.values),
        "inequality_ok": poly.check_inequality(),
        "observed_slack": poly.observed_slack(),
    })
    return 0


def _cmd_reproduce(args) -> int:
    cfg = ScenarioConfig(scenario=args.scenario, p=args.p, seed=args.seed,
                         tol=args.tol, n_max=args.n_max, out=args.out)
    report = run_scenario(cfg)
    for name, value in sorted(report.verdicts.items()):
        print(f"{name}: {value}")
    if args.out:
        for path in emit_report(report, args.out):
            print(f"wrote {path}")
    print(f"expected verdicts matched: {report.expected_ok}")
    return 0 if report.expected_ok else 1


def _cmd_acceptance(args) -> int:
    from .acceptance import CRITERIA

    selected = CRITERIA
    if args.only:
        wanted = set(args.only)
        selected = tuple(c for c in CRITERIA if any(w in c.name for w in wanted))
        if not selected:
            print(f"no criterion matches {sorted(wanted)}", file=sys.stderr)
            return 2
    results = []
    for crit in selected:
        try:
            ok, detail = crit.run()
        except Exception as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((crit.name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} {crit.name}: {detail}")
    if args.out:
        from .scenarios import Report, _stamp

        report = Report("acceptance", stamp=_stamp(ScenarioConfig("acceptance")))
        report.tables["criteria"] = {
            "columns": ["criterion", "status", "detail"],
            "rows": [[n, "PASS" if ok else "FAIL", d] for n, ok, d in results],
        }
        report.verdicts = {n: bool(ok) for n, ok, _ in results}
        report.expected_ok = all(ok for _, ok, _ in results)
        for path in emit_report(report, args.out):
            print(f"wrote {path}")
    return 0 if all(ok for _, ok, _ in results) else 1


def _add_common(sub, p_default=2.0):
    sub.add_argument("--p", type=float, default=p_default,
                     help="Wasserstein exponent (default %(default)s)")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for every randomized choice (default %(default)s)")
    sub.add_argument("--tol", type=float, default=1e-6,
                     help="convergence tolerance (default %(default)s)")
    sub.add_argument("--out", type=str, default=None,
                     help="directory for report.json and CSV tables")
    sub.add_argument("--n-max", dest="n_max", type=int, default=200,
                     help="index cap for limit probes (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wasslab",
        description="Exact optimal transport and unit-slope field verification "
                    "on discrete measures.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("wp", help="exact W_p between two measures from a JSON file")
    sp.add_argument("measures", help="JSON file with the measures")
    sp.add_argument("--i", type=int, default=0, help="index of the first measure")
    sp.add_argument("--j", type=int, default=1, help="index of the second measure")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_wp)

    sp = subs.add_parser("geodesic", help="evaluate the displacement geodesic")
    sp.add_argument("measures")
    sp.add_argument("--i", type=int, default=0)
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--t", type=float, default=None, help="absolute arc length")
    sp.add_argument("--frac", type=float, default=0.5,
                    help="arc-length fraction when --t is absent (default %(default)s)")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_geodesic)

    sp = subs.add_parser("busemann", help="horizon value of a lifted-field ray")
    sp.add_argument("config", help="JSON config with field, start, omega")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_busemann)

    sp = subs.add_parser("slope", help="local (and optional global) slope estimates")
    sp.add_argument("config")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_slope)

    sp = subs.add_parser("check-viscosity", help="sphere-calibration test for unit slope")
    sp.add_argument("config")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_check_viscosity)

    sp = subs.add_parser("descend", help="budgeted greedy descent of a field")
    sp.add_argument("config")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_descend)

    sp = subs.add_parser("reproduce", help="run a named scenario")
    sp.add_argument("scenario", choices=["ex3", "ex5", "lift-demo"])
    _add_common(sp)
    sp.set_defaults(fn=_cmd_reproduce)

    sp = subs.add_parser("acceptance", help="run the acceptance criteria battery")
    sp.add_argument("--only", nargs="*", default=None,
                    help="run only criteria whose name contains one of these strings")
    _add_common(sp)
    sp.set_defaults(fn=_cmd_acceptance)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except WasslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
