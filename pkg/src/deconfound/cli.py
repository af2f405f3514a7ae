"""Command-line front end: ``deconfound {describe,project,estimate,sweep} DATA.csv``.

Exit codes: 0 success, 2 parse/config error, 3 solver non-convergence,
4 an estimator was undefined where a scalar was required.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .csvio import fmt, format_counts, parse_counts, table_from_rows
from .errors import (
    ConditioningOnNull,
    DeconfoundError,
    EmptyGroup,
    MissingDelta,
    NotConverged,
    ParseError,
    SchemaError,
    UndefinedRatio,
)
from .estimators import effect_reports, encode, two_way_or, two_way_rr, _maybe
from .flow import default_grid, delta_sweep, format_sweep, mh_monotone, parse_grid
from .projection import SolverConfig, dp_projection, logit_maxent, parity_logit, pr_projection
from .table import DEFAULT_PSEUDO_COUNT, Schema, Table, marginalize, normalize

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_UNDEFINED = 0, 2, 3, 4


@dataclass
class RunConfig:
    outcome: str | None = None
    exposure: str | None = None
    confounders: list[str] | None = None
    event_level: str | None = None
    reference_exposure: str | None = None
    pseudo_count: float = DEFAULT_PSEUDO_COUNT
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    levels: dict[str, list[str]] = field(default_factory=dict)

    _aliases = {"event": "event_level", "reference": "reference_exposure",
                "tol": "tolerance", "max_iter": "max_iterations"}

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from None
        names = {f.name for f in fields(cls)}
        kw = {}
        for k, v in obj.items():
            k = cls._aliases.get(k, k)
            if k not in names:
                raise SchemaError(f"unknown config key {k!r}")
            kw[k] = v
        return cls(**kw)

    def solver(self) -> SolverConfig:
        return SolverConfig(self.tolerance, self.max_iterations, self.pseudo_count)

    def schema(self, names, seen_levels) -> Schema:
        for attr in ("outcome", "exposure", "event_level", "reference_exposure"):
            if getattr(self, attr) is None:
                raise SchemaError(f"missing required setting {attr!r}")
        for role in (self.outcome, self.exposure, *(self.confounders or [])):
            if role not in names:
                raise SchemaError(f"variable {role!r} is not a CSV column")
        confounders = self.confounders
        if confounders is None:
            confounders = [n for n in names if n not in (self.outcome, self.exposure)]
        assigned = {self.outcome, self.exposure, *confounders}
        unassigned = [n for n in names if n not in assigned]
        if unassigned:
            raise SchemaError(f"columns without a role: {unassigned}")
        levels = {}
        for n in names:
            lv = list(self.levels.get(n, seen_levels[n]))
            missing = [x for x in seen_levels[n] if x not in lv]
            if missing:
                raise SchemaError(f"levels {missing} of {n!r} not listed in config")
            levels[n] = lv
        return Schema.build(levels, self.outcome, self.exposure,
                            self.event_level, self.reference_exposure)


def load(path, cfg: RunConfig) -> Table:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    names, seen, rows = parse_counts(text)
    return table_from_rows(cfg.schema(names, seen), names, rows)


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    overrides = {
        "outcome": args.outcome,
        "exposure": args.exposure,
        "confounders": args.confounders.split(",") if args.confounders else None,
        "event_level": args.event,
        "reference_exposure": args.reference,
        "pseudo_count": args.pseudo_count,
        "tolerance": args.tol,
        "max_iterations": args.max_iter,
    }
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    return cfg


def _emit(text: str, args) -> None:
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def cmd_describe(args, cfg: RunConfig) -> int:
    t = load(args.data, cfg)
    s = t.schema
    d = normalize(t)
    marginals = {
        n: {lv: float(p) for lv, p in zip(s.variable(n).levels, marginalize(d, [n]).flat)}
        for n in s.names
    }
    profiles = int(np.prod([len(s.variable(c).levels) for c in s.confounders]))
    summary = {
        "N": t.total(),
        "cells": s.size,
        "domain_sizes": dict(zip(s.names, s.shape)),
        "roles": {"outcome": s.outcome, "exposure": s.exposure, "confounders": list(s.confounders)},
        "confounder_profiles": profiles,
        "zeros": int(np.count_nonzero(t.flat == 0)),
        "marginals": marginals,
    }
    if args.format == "json":
        _emit(_dumps(summary), args)
        return EXIT_OK
    lines = [
        f"N = {fmt(summary['N'])}",
        f"|D| = {s.size}  ({' x '.join(f'{n}:{k}' for n, k in zip(s.names, s.shape))})",
        f"outcome = {s.outcome} (event {s.event_level!r}), exposure = {s.exposure} "
        f"(reference {s.reference_exposure!r}), confounders = {', '.join(s.confounders) or '-'}",
        f"confounder profiles |D_S| = {profiles}",
        f"sampling zeros = {summary['zeros']}",
    ]
    for n, m in marginals.items():
        lines.append(f"  {n}: " + ", ".join(f"{lv}={p:.4f}" for lv, p in m.items()))
    _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


def _project(t: Table, cfg: RunConfig, method: str, delta):
    solver = cfg.solver()
    if method == "pr":
        res = pr_projection(t, solver)
        return res.distribution, res.diagnostics()
    if method == "dp":
        res = dp_projection(t, delta, solver)
        return res.distribution, res.diagnostics()
    res = logit_maxent(t, solver)
    if method == "logit":
        return res.distribution, res.diagnostics()
    return parity_logit(res.distribution, t), res.diagnostics()


def cmd_project(args, cfg: RunConfig) -> int:
    if args.method == "dp" and args.delta is None:
        raise MissingDelta("method dp requires --delta")
    if args.method != "dp" and args.delta is not None:
        raise MissingDelta("--delta only applies to method dp")
    t = load(args.data, cfg)
    dist, diag = _project(t, cfg, args.method, args.delta)
    counts = Table(dist.schema, dist.cells * t.total())
    diag = {"method": args.method, **({"delta": args.delta} if args.method == "dp" else {}), **diag}
    if args.format == "json":
        rows = [{**dict(zip(counts.names, lv)), "count": float(c)}
                for lv, c in zip(counts.schema.cells(), counts.flat)]
        _emit(_dumps({"table": rows, "diagnostics": diag}), args)
    else:
        _emit(format_counts(counts), args)
        sys.stderr.write(json.dumps(diag) + "\n")
    return EXIT_OK if diag["converged"] else EXIT_SOLVER


def cmd_estimate(args, cfg: RunConfig) -> int:
    t = load(args.data, cfg)
    reports = effect_reports(t)
    status = EXIT_OK
    if args.with_pr:
        res = pr_projection(t, cfg.solver())
        q = res.distribution
        for lv, rep in reports.items():
            rep.extra["pr_or"] = _maybe(two_way_or, q, lv)
            rep.extra["pr_rr"] = _maybe(two_way_rr, q, lv)
            rep.extra["pr_diagnostics"] = res.diagnostics()
        if not res.converged:
            status = EXIT_SOLVER
    if status == EXIT_OK and not all(
        r.complete and None not in (r.extra.get("pr_or", 0), r.extra.get("pr_rr", 0))
        for r in reports.values()
    ):
        status = EXIT_UNDEFINED
    if args.format == "json":
        body = [r.to_dict() for r in reports.values()]
        _emit(_dumps(body[0] if len(body) == 1 else body), args)
    elif args.format == "csv":
        lines = ["exposure_level,metric,stratum,value"]
        for r in reports.values():
            d = r.to_dict()
            for k in ("crude_or", "crude_rr", "mh_or", "mh_rr", "pr_or", "pr_rr"):
                if k in d:
                    lines.append(f"{r.exposure_level},{k},,{_cell(d[k])}")
            for st in r.strata:
                key = "|".join(st.levels)
                lines.append(f"{r.exposure_level},stratum_or,{key},{_cell(encode(st.odds_ratio))}")
                lines.append(f"{r.exposure_level},stratum_rr,{key},{_cell(encode(st.risk_ratio))}")
        _emit("\n".join(lines) + "\n", args)
    else:
        _emit(_summary(reports), args)
    return status


def _cell(v) -> str:
    if v is None:
        return ""
    return v if isinstance(v, str) else fmt(v)


def _two(v) -> str:
    return "undefined" if v is None else f"{v:.2f}"


def _summary(reports) -> str:
    lines = []
    for r in reports.values():
        lines.append(f"exposure {r.exposure_level!r} vs reference")
        lines.append(f"  crude OR {_two(r.crude_or)}   crude RR {_two(r.crude_rr)}")
        lines.append(f"  MH OR    {_two(r.mh_or)}   MH RR    {_two(r.mh_rr)}")
        if "pr_or" in r.extra:
            lines.append(f"  PR OR    {_two(r.extra['pr_or'])}   PR RR    {_two(r.extra['pr_rr'])}")
        for st in r.strata:
            lines.append(f"  stratum {'/'.join(st.levels) or '-'}: OR {_two(st.odds_ratio)}"
                         f"  RR {_two(st.risk_ratio)}")
    return "\n".join(lines) + "\n"


def cmd_sweep(args, cfg: RunConfig) -> int:
    grid = parse_grid(args.grid) if args.grid else default_grid()
    t = load(args.data, cfg)
    records = delta_sweep(t, grid, cfg.solver(), workers=args.workers)
    if args.format == "json":
        body = {
            "records": [
                {"delta": r.delta, "crude_or": encode(r.crude_or), "mh_or": encode(r.mh_or),
                 "pr_or": encode(r.pr_or), "max_stratum_or_drift": encode(r.max_stratum_or_drift),
                 "converged": r.converged, **({"error": r.error} if r.error else {})}
                for r in records
            ],
            "mh_monotone": mh_monotone(records),
        }
        _emit(_dumps(body), args)
    else:
        _emit(format_sweep(records), args)
    return EXIT_OK if all(r.converged for r in records) else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with role settings")
    common.add_argument("--outcome")
    common.add_argument("--exposure")
    common.add_argument("--confounders", help="comma-separated; default: all other columns")
    common.add_argument("--event", help="event level of the outcome")
    common.add_argument("--reference", help="reference level of the exposure")
    common.add_argument("--pseudo-count", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", type=int)
    common.add_argument("--output", "-o", help="output path (default stdout)")

    p = argparse.ArgumentParser(prog="deconfound", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    data_help = "count CSV: var1,...,varK,count"
    d = sub.add_parser("describe", parents=[common], help="table summary")
    d.add_argument("data", help=data_help)
    d.add_argument("--format", choices=["text", "json"], default="text")
    d.set_defaults(func=cmd_describe)

    pr = sub.add_parser("project", parents=[common], help="projected table")
    pr.add_argument("method", choices=["pr", "dp", "logit", "parity-logit"])
    pr.add_argument("data", help=data_help)
    pr.add_argument("--delta", type=float)
    pr.add_argument("--format", choices=["csv", "json"], default="csv")
    pr.set_defaults(func=cmd_project)

    e = sub.add_parser("estimate", parents=[common], help="effect-size report")
    e.add_argument("data", help=data_help)
    e.add_argument("--with-pr", action="store_true", help="add OR/RR of the PR-projection")
    e.add_argument("--format", choices=["json", "csv", "text"], default="json")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sweep", parents=[common], help="DP-projection delta sweep")
    s.add_argument("data", help=data_help)
    s.add_argument("--grid", help="start:stop:step (default 0:1:0.05)")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "project" and args.delta is not None and not 0 <= args.delta <= 1:
            raise MissingDelta("--delta must lie in [0, 1]")
        return args.func(args, cfg)
    except (DeconfoundError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return _exit_code(exc)


def _exit_code(exc) -> int:
    if isinstance(exc, NotConverged):
        return EXIT_SOLVER
    if isinstance(exc, (UndefinedRatio, EmptyGroup, ConditioningOnNull)):
        return EXIT_UNDEFINED
    return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
