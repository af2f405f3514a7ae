"""Two-way, stratified and Mantel-Haenszel risk metrics.

Every estimator works top-down from a full table (counts or probabilities;
all of them are scale invariant).  The outcome is split into the event level
and its complement, the exposure is compared pairwise against the reference
level, and the joint confounder profile defines the strata.

Zero cells give extended reals: ``x/0 = inf`` for ``x > 0`` and ``0/x = 0``.
Scalar estimators raise ``UndefinedRatio`` on ``0/0`` and ``inf/inf``;
stratified listings carry such entries in-band as ``None``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGroup, SchemaError, UndefinedRatio, ZeroDenominator
from .table import Table


@dataclass(frozen=True)
class _Arms:
    """Per-stratum event/non-event mass in the exposed and reference arms."""

    ev1: np.ndarray
    ne1: np.ndarray
    ev0: np.ndarray
    ne0: np.ndarray
    strata: list


def _exposed_level(d: Table, exposure_level):
    s = d.schema
    levels = s.variable(s.exposure).levels
    if exposure_level is None:
        others = [lv for lv in levels if lv != s.reference_exposure]
        if len(others) != 1:
            raise SchemaError(
                f"exposure {s.exposure!r} has {len(others)} non-reference levels; pick one"
            )
        return others[0]
    if exposure_level == s.reference_exposure:
        raise SchemaError("exposure_level must differ from the reference level")
    s.variable(s.exposure).index(exposure_level)
    return exposure_level


def _arms(d: Table, exposure_level=None) -> _Arms:
    s = d.schema
    s.require_study()
    exposed = _exposed_level(d, exposure_level)
    conf = s.confounders
    cells = d.transposed([s.outcome, s.exposure, *conf])
    cells = cells.reshape(cells.shape[0], cells.shape[1], -1)
    iy = s.variable(s.outcome).index(s.event_level)
    xv = s.variable(s.exposure)
    ix1, ix0 = xv.index(exposed), xv.index(s.reference_exposure)
    event = cells[iy]
    nonevent = np.delete(cells, iy, axis=0).sum(axis=0)
    strata = list(itertools.product(*(s.variable(c).levels for c in conf)))
    return _Arms(event[ix1], nonevent[ix1], event[ix0], nonevent[ix0], strata)


def _ratio(num: float, den: float) -> float:
    """Extended-real quotient; ``0/0`` and ``inf/inf`` raise ``UndefinedRatio``."""
    if (num == 0 and den == 0) or (math.isinf(num) and math.isinf(den)):
        raise UndefinedRatio(f"{num}/{den} is undefined")
    if den == 0:
        return math.inf
    if math.isinf(num):
        return math.inf
    return num / den


def _safe(num: float, den: float):
    try:
        return _ratio(num, den)
    except UndefinedRatio:
        return None


def _stratum_index(d: Table, stratum) -> int:
    conf = d.schema.confounders
    if isinstance(stratum, dict):
        stratum = tuple(stratum[c] for c in conf)
    stratum = tuple(stratum)
    if len(stratum) != len(conf):
        raise SchemaError(f"stratum needs one level for each of {conf}")
    idx = 0
    for c, lv in zip(conf, stratum):
        v = d.schema.variable(c)
        idx = idx * len(v.levels) + v.index(lv)
    return idx


def odds(d: Table, exposure_level, stratum=None) -> float:
    """Odds of the event within an exposure group, optionally within one stratum."""
    s = d.schema
    s.require_study()
    xv = s.variable(s.exposure)
    ix = xv.index(exposure_level)
    cells = d.transposed([s.outcome, s.exposure, *s.confounders])
    cells = cells.reshape(cells.shape[0], cells.shape[1], -1)[:, ix, :]
    if stratum is not None:
        cells = cells[:, _stratum_index(d, stratum)]
    else:
        cells = cells.sum(axis=1)
    iy = s.variable(s.outcome).index(s.event_level)
    ev = float(cells[iy])
    ne = float(cells.sum() - ev)
    if ev + ne <= 0:
        raise EmptyGroup(f"group {exposure_level!r} {stratum or ''} has no mass")
    return _ratio(ev, ne)


def _risk(ev, ne):
    if ev + ne <= 0:
        raise EmptyGroup("exposure group has no mass")
    return ev / (ev + ne)


def two_way_or(d: Table, exposure_level=None) -> float:
    a = _arms(d, exposure_level)
    ev1, ne1, ev0, ne0 = (float(x.sum()) for x in (a.ev1, a.ne1, a.ev0, a.ne0))
    if ev1 + ne1 <= 0 or ev0 + ne0 <= 0:
        raise EmptyGroup("an exposure group has no mass")
    return _ratio(_ratio(ev1, ne1), _ratio(ev0, ne0))


def two_way_rr(d: Table, exposure_level=None) -> float:
    a = _arms(d, exposure_level)
    ev1, ne1, ev0, ne0 = (float(x.sum()) for x in (a.ev1, a.ne1, a.ev0, a.ne0))
    return _ratio(_risk(ev1, ne1), _risk(ev0, ne0))


def stratified_or(d: Table, exposure_level=None) -> list[tuple[tuple[str, ...], float | None]]:
    """Per-stratum odds ratios; ``None`` where a stratum's ratio is undefined."""
    a = _arms(d, exposure_level)
    out = []
    for k, stratum in enumerate(a.strata):
        ev1, ne1, ev0, ne0 = (float(x[k]) for x in (a.ev1, a.ne1, a.ev0, a.ne0))
        if ev1 + ne1 <= 0 or ev0 + ne0 <= 0:
            out.append((stratum, None))
            continue
        o1, o0 = _ratio(ev1, ne1), _ratio(ev0, ne0)
        out.append((stratum, _safe(o1, o0)))
    return out


def stratified_rr(d: Table, exposure_level=None) -> list[tuple[tuple[str, ...], float | None]]:
    a = _arms(d, exposure_level)
    out = []
    for k, stratum in enumerate(a.strata):
        ev1, ne1, ev0, ne0 = (float(x[k]) for x in (a.ev1, a.ne1, a.ev0, a.ne0))
        if ev1 + ne1 <= 0 or ev0 + ne0 <= 0:
            out.append((stratum, None))
            continue
        out.append((stratum, _safe(_risk(ev1, ne1), _risk(ev0, ne0))))
    return out


def mh_or(d: Table, exposure_level=None) -> float:
    """Mantel-Haenszel pooled odds ratio.

    ``sum_s ev1*ne0/n_s / sum_s ev0*ne1/n_s`` with ``n_s`` the mass of the
    compared arms in stratum ``s``; empty strata do not contribute.
    """
    a = _arms(d, exposure_level)
    n = a.ev1 + a.ne1 + a.ev0 + a.ne0
    use = n > 0
    num = float(np.sum(a.ev1[use] * a.ne0[use] / n[use]))
    den = float(np.sum(a.ev0[use] * a.ne1[use] / n[use]))
    if den == 0:
        raise ZeroDenominator("pooled odds-ratio denominator is zero")
    return num / den


def mh_rr(d: Table, exposure_level=None) -> float:
    """Mantel-Haenszel pooled risk ratio ``sum ev1*n0/n / sum ev0*n1/n``."""
    a = _arms(d, exposure_level)
    n1 = a.ev1 + a.ne1
    n0 = a.ev0 + a.ne0
    n = n1 + n0
    use = n > 0
    num = float(np.sum(a.ev1[use] * n0[use] / n[use]))
    den = float(np.sum(a.ev0[use] * n1[use] / n[use]))
    if den == 0:
        raise ZeroDenominator("pooled risk-ratio denominator is zero")
    return num / den


@dataclass
class StratumEffect:
    levels: tuple[str, ...]
    odds_ratio: float | None
    risk_ratio: float | None


@dataclass
class EffectReport:
    exposure_level: str
    crude_or: float | None
    crude_rr: float | None
    mh_or: float | None
    mh_rr: float | None
    strata: list[StratumEffect] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        """True when every scalar metric is defined."""
        return None not in (self.crude_or, self.crude_rr, self.mh_or, self.mh_rr)

    def to_dict(self) -> dict:
        out = {
            "exposure_level": self.exposure_level,
            "crude_or": encode(self.crude_or),
            "crude_rr": encode(self.crude_rr),
            "mh_or": encode(self.mh_or),
            "mh_rr": encode(self.mh_rr),
            "strata": [
                {"levels": list(s.levels), "or": encode(s.odds_ratio), "rr": encode(s.risk_ratio)}
                for s in self.strata
            ],
        }
        out.update({k: encode(v) if isinstance(v, (float, type(None))) else v
                    for k, v in self.extra.items()})
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, obj: dict) -> "EffectReport":
        known = {"exposure_level", "crude_or", "crude_rr", "mh_or", "mh_rr", "strata"}
        return cls(
            exposure_level=obj.get("exposure_level"),
            crude_or=decode(obj["crude_or"]),
            crude_rr=decode(obj["crude_rr"]),
            mh_or=decode(obj["mh_or"]),
            mh_rr=decode(obj["mh_rr"]),
            strata=[
                StratumEffect(tuple(s["levels"]), decode(s["or"]), decode(s["rr"]))
                for s in obj["strata"]
            ],
            extra={k: v for k, v in obj.items() if k not in known},
        )


def encode(x):
    """JSON encoding of an extended real: ``inf`` as a string, undefined as null."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def decode(x):
    return None if x is None else float(x)


def _maybe(fn, *args):
    try:
        return fn(*args)
    except (UndefinedRatio, EmptyGroup):
        return None


def effect_report(d: Table, exposure_level=None) -> EffectReport:
    exposed = _exposed_level(d, exposure_level)
    ors = stratified_or(d, exposed)
    rrs = stratified_rr(d, exposed)
    return EffectReport(
        exposure_level=exposed,
        crude_or=_maybe(two_way_or, d, exposed),
        crude_rr=_maybe(two_way_rr, d, exposed),
        mh_or=_maybe(mh_or, d, exposed),
        mh_rr=_maybe(mh_rr, d, exposed),
        strata=[StratumEffect(lv, o, r) for (lv, o), (_, r) in zip(ors, rrs)],
    )


def effect_reports(d: Table) -> dict[str, EffectReport]:
    """One report per non-reference exposure level."""
    s = d.schema
    s.require_study()
    levels = [lv for lv in s.variable(s.exposure).levels if lv != s.reference_exposure]
    return {lv: effect_report(d, lv) for lv in levels}
