"""Sweep of the DP-projection over ``delta``: crude vs. pooled OR under controlled disparity."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .csvio import fmt
from .errors import BadGridSpec, DeconfoundError
from .estimators import mh_or, stratified_or, two_way_or
from .projection import SolverConfig, dp_projection, pr_projection
from .table import Table, normalize, regularize

SWEEP_HEADER = ("delta", "crude_or", "mh_or", "pr_or", "max_stratum_or_drift", "converged")


@dataclass(frozen=True)
class SweepRecord:
    delta: float
    crude_or: float
    mh_or: float
    pr_or: float
    max_stratum_or_drift: float
    converged: bool
    error: str | None = None


def default_grid() -> list[float]:
    return [round(k / 20, 10) for k in range(21)]


def parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` with both ends inclusive, e.g. ``0:1:0.05`` -> 21 points."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise BadGridSpec(f"grid must look like start:stop:step, got {spec!r}") from None
    if not (0.0 <= start <= stop <= 1.0) or step <= 0:
        raise BadGridSpec(f"grid {spec!r} must satisfy 0 <= start <= stop <= 1 and step > 0")
    n = int(math.floor((stop - start) / step + 1e-9))
    grid = [start + k * step for k in range(n + 1)]
    # drop float drift such as 0.15000000000000002
    digits = max(0, -int(math.floor(math.log10(step)))) + 6
    return [min(round(g, digits), 1.0) for g in grid]


def _stratum_drift(reference: list, current: list) -> float:
    drift = 0.0
    for (_, r), (_, c) in zip(reference, current):
        if r is None or not math.isfinite(r) or r == 0:
            continue
        if c is None:
            return math.inf
        drift = max(drift, abs(c - r) / r)
    return drift


def delta_sweep(
    f: Table,
    grid: Sequence[float] | None = None,
    cfg: SolverConfig = SolverConfig(),
    workers: int | None = None,
) -> list[SweepRecord]:
    """One record per grid point, each projected from ``f`` itself.

    ``pr_or`` is the crude OR of the PR-projection, computed once.  Drift is
    measured against the stratified ORs of the regularized input.  Grid points
    are independent, so ``workers > 1`` evaluates them on a thread pool;
    output order always follows ``grid``.
    """
    grid = default_grid() if grid is None else list(grid)
    if not grid:
        raise BadGridSpec("empty grid")
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise BadGridSpec("grid points must lie in [0, 1]")
    if list(grid) != sorted(grid):
        raise BadGridSpec("grid must be sorted")

    reference = stratified_or(normalize(regularize(f, cfg.epsilon)))
    pr_or = two_way_or(pr_projection(f, cfg).raise_for_status().distribution)

    def run(delta):
        try:
            res = dp_projection(f, delta, cfg)
            p = res.distribution
            return SweepRecord(
                delta=delta,
                crude_or=two_way_or(p),
                mh_or=mh_or(p),
                pr_or=pr_or,
                max_stratum_or_drift=_stratum_drift(reference, stratified_or(p)),
                converged=res.converged,
            )
        except DeconfoundError as exc:
            return SweepRecord(delta, math.nan, math.nan, pr_or, math.nan, False, str(exc))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, grid))
    return [run(d) for d in grid]


def mh_monotone(records: Sequence[SweepRecord]) -> bool:
    """Whether the pooled OR moves monotonically (either direction) along the sweep."""
    vals = np.array([r.mh_or for r in records])
    steps = np.diff(vals)
    return bool(np.all(steps >= 0) or np.all(steps <= 0))


def format_sweep(records: Sequence[SweepRecord]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in records:
        w.writerow(
            [fmt(r.delta), fmt(r.crude_or), fmt(r.mh_or), fmt(r.pr_or),
             fmt(r.max_stratum_or_drift), "true" if r.converged else "false"]
        )
    return out.getvalue()


def parse_sweep(text: str) -> list[SweepRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != SWEEP_HEADER:
        raise ValueError("not a sweep CSV")
    out = []
    for row in rows[1:]:
        if not row:
            continue
        *nums, conv = row
        out.append(SweepRecord(*(float(x) for x in nums), converged=conv == "true"))
    return out
