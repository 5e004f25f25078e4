"""Command line entry point.

    alexot solve --config cfg.json [--out DIR] [--format json|csv]
    alexot check-monotone SUPPORT.json
    alexot restrict SUPPORT.json --t 0.5
    alexot delta --C 1.5 2 4
    alexot chart --config cfg.json
    alexot scenario NAME [--config cfg.json] [--seed N] [--out DIR]
    alexot list-scenarios

Exit codes: 0 success, 2 negative finding, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as aio
from .charts import all_pairs, chart_eval, distortion
from .errors import ConfigError
from .monotonicity import SupportSet, check_cyclical, delta_of_C, restrict
from .scenarios import (SCENARIOS, _measures, chart_from_spec, merge_config, run_scenario,
                        write_table)
from .solver import detect_map, solve

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _config(args) -> dict:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _load_support(path) -> SupportSet:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read support {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"support {path} is not valid JSON: {exc}") from exc
    return aio.support_from_dict(d)


def _emit(args, name: str, payload: dict, header=None, rows=None):
    """JSON goes to ``DIR/name.json`` or stdout; csv needs a table."""
    if args.format == "csv":
        if header is None:
            raise ConfigError(f"{name}: no tabular output, use --format json")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            write_table(Path(args.out) / f"{name}.csv", header, rows)
        else:
            import csv
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])
        return
    text = aio.dumps(payload)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / f"{name}.json").write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    cfg = merge_config(_config(args))
    _, mu0, mu1 = _measures(cfg)
    plan = solve(mu0, mu1)
    cert = detect_map(plan, float(cfg["mass_tol"]))
    payload = {"plan": aio.plan_to_dict(plan, cfg["seed"]), "verdict": cert.verdict,
               "split_rows": cert.split_rows}
    rows = [[int(i), int(j), float(w)] for i, j, w in zip(plan.rows, plan.cols, plan.mass)]
    _emit(args, "plan", payload, ["source", "target", "mass"], rows)
    return EXIT_OK


def cmd_check(args) -> int:
    support = _load_support(args.support)
    res = check_cyclical(support, tol=args.tol)
    _emit(args, "monotonicity", aio.cyclical_to_dict(res, support))
    return EXIT_OK if res.certified else EXIT_NEGATIVE


def cmd_restrict(args) -> int:
    support = _load_support(args.support)
    out = restrict(support, args.t)
    rows = [[*s.tolist(), *t.tolist()] for s, t in zip(out.sources, out.targets)]
    dim = support.sources.shape[1]
    header = [f"x{i}" for i in range(dim)] + [f"y{i}" for i in range(dim)]
    _emit(args, "restricted", aio.support_to_dict(out), header, rows)
    return EXIT_OK


def cmd_delta(args) -> int:
    probs = [delta_of_C(c, args.resolution) for c in args.C]
    rows = [[p.C, p.delta] for p in probs]
    payload = {"C": [p.C for p in probs], "delta": [p.delta for p in probs],
               "maximizers": [{"y1": p.y1, "y2": p.y2} for p in probs]}
    _emit(args, "delta", payload, ["C", "delta"], rows)
    return EXIT_OK


def cmd_chart(args) -> int:
    cfg = merge_config(_config(args))
    chart = chart_from_spec(cfg["chart"])
    points = [np.asarray(p, float) for p in cfg.get("points", [chart.base.tolist()])]
    coords = [chart_eval(chart, p) for p in points]
    payload = {"chart": chart.to_spec(), "space": chart.space.to_spec(),
               "points": points, "coordinates": coords}
    if len(points) >= 2:
        d = distortion(chart, all_pairs(points))
        payload.update(max_ratio=d.max_ratio, min_ratio=d.min_ratio, skipped_pairs=d.skipped)
    rows = [[*p.tolist(), *c.tolist()] for p, c in zip(points, coords)]
    header = [f"x{i}" for i in range(len(points[0]))] + [f"phi{i}" for i in range(len(coords[0]))]
    _emit(args, "chart", payload, header, rows)
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {args.name!r}; known: {', '.join(sorted(SCENARIOS))}")
    out = args.out or f"out/{args.name}"
    result = run_scenario(args.name, _config(args), out)
    print(f"{args.name}: status {result.status}, report in {out}/report.json")
    return result.status


def cmd_list(args) -> int:
    for name in sorted(SCENARIOS):
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="alexot", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("solve", parents=[common], help="solve the discrete transport problem"
                   ).set_defaults(func=cmd_solve)
    c = sub.add_parser("check-monotone", parents=[common], help="certify a support set")
    c.add_argument("support")
    c.add_argument("--tol", type=float, default=1e-9)
    c.set_defaults(func=cmd_check)
    r = sub.add_parser("restrict", parents=[common], help="restrict a support along geodesics")
    r.add_argument("support")
    r.add_argument("--t", type=float, required=True)
    r.set_defaults(func=cmd_restrict)
    d = sub.add_parser("delta", parents=[common], help="tabulate delta(C)")
    d.add_argument("--C", type=float, nargs="+", default=[1.5, 2.0, 4.0])
    d.add_argument("--resolution", type=int, default=1001)
    d.set_defaults(func=cmd_delta)
    sub.add_parser("chart", parents=[common], help="evaluate a distance chart"
                   ).set_defaults(func=cmd_chart)
    s = sub.add_parser("scenario", parents=[common], help="run a registered scenario")
    s.add_argument("name")
    s.set_defaults(func=cmd_scenario)
    sub.add_parser("list-scenarios", help="print scenario names").set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
