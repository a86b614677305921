"""Command-line front end: ``eval``, ``bounds``, ``simulate`` and ``compare``.

Every subcommand writes plot-ready CSV files under an output prefix and a
JSON report on stdout.  Failures print a JSON error object on stderr and
exit with 2 (invalid input), 3 (numerical failure) or 4 (``compare``
verdict failed).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bounds import (
    best_busy_band,
    best_cycle_band,
    cycle_band_from_busy,
    general_busy_band,
)
from .curves import Curve
from .exact import (
    SeriesConfig,
    TruncationError,
    busy_cdf_series,
    busy_cdf_special,
    cycle_cdf_from_busy,
    cycle_cdf_special,
    special_curve,
)
from .model import (
    DomainError,
    Exponential,
    ExtrapolationError,
    QueueParams,
    SpecialFamily,
    Tabulated,
)
from .simulation import (
    SimConfig,
    empirical_cdf,
    independence_check,
    ks_critical,
    ks_distance,
    simulate_replicas,
    summary,
    write_summary,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_VERDICT = 0, 2, 3, 4
KS_BUSY_LIMIT = 0.005
BAND_SLACK = 1e-9


class VerdictFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(EXIT_INVALID, "UsageError", message)


def _fail(code: int, kind: str, message: str, **extra) -> None:
    err = {"error": kind, "message": message, "exit_code": code, **extra}
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    raise SystemExit(code)


def read_config(path: str) -> dict:
    """Parse a ``key=value`` file; ``#`` starts a comment, keys use flag spelling."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _common(p: argparse.ArgumentParser, sim: bool) -> None:
    p.add_argument("--config", help="key=value file overriding the defaults")
    p.add_argument("--lambda", dest="lam", type=float, help="arrival rate")
    p.add_argument("--alpha", type=float, help="mean service time (tables default to their mean)")
    p.add_argument("--model", choices=["exp", "special", "table"], default="exp")
    p.add_argument("--beta", type=float, help="special-family parameter")
    p.add_argument("--table", help="CSV with header t,G for --model table")
    p.add_argument("--grid-h", dest="grid_h", type=float, default=0.01)
    p.add_argument("--grid-T", dest="grid_T", type=float, help="horizon (default 30 alpha + 10/lambda)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-terms", dest="max_terms", type=int, default=200)
    p.add_argument("--out", default="mginf", help="output path prefix")
    if sim:
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--cycles", type=int, default=100_000)
        p.add_argument("--replicas", type=int, default=1)
        p.add_argument("--workers", type=int, default=1)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="mginf-busy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {
        "eval": sub.add_parser("eval", help="exact busy-period and busy-cycle CDFs"),
        "bounds": sub.add_parser("bounds", help="busy-period and busy-cycle bound bands"),
        "simulate": sub.add_parser("simulate", help="Monte Carlo busy cycles"),
        "compare": sub.add_parser("compare", help="simulate, evaluate and check bounds"),
    }
    for name, p in subs.items():
        _common(p, sim=name in ("simulate", "compare"))
    subs["eval"].add_argument("--t", type=float, nargs="*", default=[], help="points to report")
    return parser, subs


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        conf = {("lam" if k == "lambda" else k): v for k, v in conf.items()}
        actions = {a.dest: a for a in subs[args.command]._actions}
        unknown = sorted(k for k in conf if k not in actions or k in ("help", "config"))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        subs[args.command].set_defaults(
            **{k: actions[k].type(v) if actions[k].type else v for k, v in conf.items()}
        )
        args = parser.parse_args(argv)
    return args


def _setup(args):
    if args.lam is None:
        raise DomainError("--lambda is required")
    if args.model == "table":
        if not args.table:
            raise DomainError("--model table needs --table")
        model = Tabulated.from_csv(args.table)
        alpha = args.alpha if args.alpha is not None else model.mean()
    else:
        if args.alpha is None:
            raise DomainError("--alpha is required")
        alpha = args.alpha
        if args.model == "special":
            if args.beta is None:
                raise DomainError("--model special needs --beta")
            model = SpecialFamily(args.beta)
        else:
            model = Exponential()
    params = QueueParams(args.lam, alpha)
    model.validate(params)
    horizon = args.grid_T if args.grid_T is not None else params.default_horizon()
    cfg = SeriesConfig(h=args.grid_h, horizon=horizon, tol=args.tol, max_terms=args.max_terms)
    return model, params, cfg


def _path(args, name: str, ext: str = "csv") -> Path:
    prefix = Path(args.out)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True, exist_ok=True)
    return prefix.with_name(f"{prefix.name}_{name}.{ext}")


def _params_dict(params: QueueParams) -> dict:
    return {"lambda": params.lam, "alpha": params.alpha, "rho": params.rho}


def do_eval(args) -> dict:
    model, params, cfg = _setup(args)
    files = []
    busy = busy_cdf_series(model, params, cfg)
    p = _path(args, "busy_series")
    files += [str(p), str(busy.to_files(p))]
    cycle = cycle_cdf_from_busy(busy, params)
    p = _path(args, "cycle_series")
    cycle.to_csv(p)
    files.append(str(p))
    report = {
        "command": "eval",
        "params": _params_dict(params),
        "terms_used": busy.terms_used,
        "truncation_bound": busy.truncation_bound,
        "files": files,
    }
    special = isinstance(model, SpecialFamily)
    if special:
        for fn, name in ((busy_cdf_special, "busy_special"), (cycle_cdf_special, "cycle_special")):
            p = _path(args, name)
            special_curve(fn, params, model.beta, cfg.h, cfg.horizon, name).to_csv(p)
            files.append(str(p))
    points = []
    for t in args.t:
        row = {"t": t, "busy_cdf_series": float(busy.cdf(t)), "cycle_cdf_series": float(cycle(t))}
        if special:
            row["busy_cdf"] = busy_cdf_special(params, model.beta, t)
            row["cycle_cdf"] = cycle_cdf_special(params, model.beta, t)
        else:
            row["busy_cdf"] = row["busy_cdf_series"]
            row["cycle_cdf"] = row["cycle_cdf_series"]
        points.append(row)
    if points:
        report["points"] = points
    return report


def _bands(model, params, cfg):
    if isinstance(model, Exponential):
        return (best_busy_band(params, cfg.h, cfg.horizon),
                best_cycle_band(params, cfg.h, cfg.horizon))
    busy = general_busy_band(model, params, cfg)
    return busy, cycle_band_from_busy(busy, params)


def do_bounds(args) -> dict:
    model, params, cfg = _setup(args)
    busy_band, cycle_band = _bands(model, params, cfg)
    files = []
    for band, name in ((busy_band, "busy_band"), (cycle_band, "cycle_band")):
        p = _path(args, name)
        band.to_csv(p)
        files.append(str(p))
    return {
        "command": "bounds",
        "params": _params_dict(params),
        "busy_lower_informative": busy_band.lower_informative,
        "cycle_lower_informative": cycle_band.lower_informative,
        "files": files,
    }


def _simulate(args, model, params):
    cfg = SimConfig(args.seed, args.cycles, model, params)
    return simulate_replicas(cfg, args.replicas, args.workers)


def do_simulate(args) -> dict:
    model, params, cfg = _setup(args)
    samples = _simulate(args, model, params)
    busy = busy_cdf_series(model, params, cfg)
    report = summary(samples, ks_distance(empirical_cdf(samples.busy), busy.cdf))
    p_samples, p_summary = _path(args, "samples"), _path(args, "summary", "json")
    samples.to_csv(p_samples)
    write_summary(p_summary, report)
    return {"command": "simulate", "params": _params_dict(params), **report,
            "files": [str(p_samples), str(p_summary)]}


def band_violations(band, values, n: Optional[int] = None) -> int:
    """Grid points where ``values`` leaves ``band``.

    With ``n`` given the values are empirical frequencies and each side gets
    a 3-sigma binomial allowance, floored at one count in ``n``.
    """
    values = np.asarray(values, dtype=float)
    if n is None:
        slack_lo = slack_up = BAND_SLACK
    else:
        var = lambda p: np.maximum(p * (1.0 - p), 1.0 / n) / n
        slack_lo = 3.0 * np.sqrt(var(band.lower.values))
        slack_up = 3.0 * np.sqrt(var(band.upper.values))
    below = values < band.lower.values - slack_lo
    above = values > band.upper.values + slack_up
    return int(np.count_nonzero(below | above))


def do_compare(args) -> dict:
    model, params, cfg = _setup(args)
    files = []

    samples = _simulate(args, model, params)
    busy = busy_cdf_series(model, params, cfg)
    cycle = cycle_cdf_from_busy(busy, params)
    busy_band, cycle_band = _bands(model, params, cfg)

    emp_busy = empirical_cdf(samples.busy)
    emp_cycle = empirical_cdf(samples.cycle)
    ks_busy = ks_distance(emp_busy, busy.cdf)
    ks_cycle = ks_distance(emp_cycle, cycle)
    ks_limit = max(KS_BUSY_LIMIT, ks_critical(len(samples)))
    sandwich = band_violations(busy_band, busy.cdf.values)
    cycle_viol = band_violations(cycle_band, emp_cycle(cycle_band.t), n=len(samples))
    try:
        indep = independence_check(samples, min_n=1)._asdict()
    except ValueError:
        indep = None

    for obj, name in ((busy, "busy_series"), (cycle, "cycle_series"),
                      (busy_band, "busy_band"), (cycle_band, "cycle_band"),
                      (samples, "samples")):
        p = _path(args, name)
        if name == "busy_series":
            files += [str(p), str(obj.to_files(p))]
        else:
            obj.to_csv(p)
            files.append(str(p))
    p_summary = _path(args, "summary", "json")
    write_summary(p_summary, summary(samples, ks_busy))
    files.append(str(p_summary))

    passed = ks_busy < ks_limit and ks_cycle < ks_limit and sandwich == 0 and cycle_viol == 0
    verdict = {
        "command": "compare",
        "params": _params_dict(params),
        "model": args.model,
        "n_cycles": len(samples),
        "ks_busy": ks_busy,
        "ks_cycle": ks_cycle,
        "ks_limit": ks_limit,
        "sandwich_violations": sandwich,
        "cycle_band_violations": cycle_viol,
        "independence": indep,
        "terms_used": busy.terms_used,
        "truncation_bound": busy.truncation_bound,
        "passed": passed,
        "files": files,
        "metadata": {
            "version": __version__,
            "seed": args.seed,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        },
    }
    p_verdict = _path(args, "verdict", "json")
    p_verdict.write_text(json.dumps(verdict, indent=2, sort_keys=True) + "\n")
    verdict["files"].append(str(p_verdict))
    if not passed:
        raise VerdictFailed(json.dumps(verdict, sort_keys=True))
    return verdict


COMMANDS = {"eval": do_eval, "bounds": do_bounds, "simulate": do_simulate, "compare": do_compare}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        report = COMMANDS[args.command](args)
    except VerdictFailed as exc:
        print(str(exc))
        _fail(EXIT_VERDICT, "VerdictFailed", "compare checks did not pass")
    except TruncationError as exc:
        _fail(EXIT_NUMERIC, "TruncationError", str(exc), achieved_bound=exc.achieved_bound)
    except (ExtrapolationError, ArithmeticError) as exc:
        _fail(EXIT_NUMERIC, type(exc).__name__, str(exc))
    except (ValueError, OSError) as exc:
        _fail(EXIT_INVALID, type(exc).__name__, str(exc))
    print(json.dumps(report, indent=2, sort_keys=True, default=_json_default))
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    raise TypeError(type(obj).__name__)


if __name__ == "__main__":
    raise SystemExit(main())
