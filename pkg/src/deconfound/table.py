"""Dense tables over the product of categorical levels.

A ``Table`` stores one non-negative real per cell of ``D = D_1 x ... x D_K``
as an ``ndarray`` with one axis per variable, in schema order.  Flattening
that array in C order gives the row-major layout used for serialization.
``Distribution`` is a ``Table`` whose mass is one.

Everything here is a pure function of immutable values: arrays held by a
table are marked read-only and operations always allocate new ones.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConditioningOnNull,
    OverlappingVariables,
    SchemaError,
    SchemaMismatch,
    UnknownVariable,
    ZeroMass,
)

OUTCOME = "outcome"
EXPOSURE = "exposure"
CONFOUNDER = "confounder"
ROLES = (OUTCOME, EXPOSURE, CONFOUNDER)

MASS_TOL = 1e-12
DEFAULT_PSEUDO_COUNT = 1e-9


@dataclass(frozen=True)
class Variable:
    name: str
    levels: tuple[str, ...]
    role: str = CONFOUNDER

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(str(lv) for lv in self.levels))
        if self.role not in ROLES:
            raise SchemaError(f"variable {self.name!r}: unknown role {self.role!r}")
        if len(self.levels) < 2:
            raise SchemaError(f"variable {self.name!r} needs at least two levels")
        if len(set(self.levels)) != len(self.levels):
            raise SchemaError(f"variable {self.name!r} has duplicate levels")

    def index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise SchemaError(f"{level!r} is not a level of {self.name!r}") from None


@dataclass(frozen=True)
class Schema:
    """Ordered categorical variables with outcome/exposure/confounder roles.

    A *study* schema has exactly one outcome and one exposure (see
    ``require_study``).  Sub-schemas produced by marginalization may drop
    either; ``event_level`` and ``reference_exposure`` are carried only while
    the corresponding variable is present.
    """

    variables: tuple[Variable, ...]
    event_level: str | None = None
    reference_exposure: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if not self.variables:
            raise SchemaError("schema has no variables")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate variable names in {names}")
        for role in (OUTCOME, EXPOSURE):
            if sum(v.role == role for v in self.variables) > 1:
                raise SchemaError(f"more than one {role} variable")
        out = self._role_var(OUTCOME)
        if out is None:
            object.__setattr__(self, "event_level", None)
        elif self.event_level is None:
            raise SchemaError("event_level is required when an outcome is present")
        else:
            out.index(self.event_level)
        exp = self._role_var(EXPOSURE)
        if exp is None:
            object.__setattr__(self, "reference_exposure", None)
        elif self.reference_exposure is None:
            raise SchemaError("reference_exposure is required when an exposure is present")
        else:
            exp.index(self.reference_exposure)

    @classmethod
    def build(
        cls,
        levels: dict[str, Sequence[str]],
        outcome: str,
        exposure: str,
        event_level: str,
        reference_exposure: str,
    ) -> "Schema":
        """Schema from an ordered ``name -> levels`` mapping; unnamed roles are confounders."""
        for name in (outcome, exposure):
            if name not in levels:
                raise UnknownVariable(f"unknown variable {name!r}")
        variables = []
        for name, lv in levels.items():
            role = OUTCOME if name == outcome else EXPOSURE if name == exposure else CONFOUNDER
            variables.append(Variable(name, tuple(lv), role))
        return cls(tuple(variables), event_level, reference_exposure)

    def _role_var(self, role):
        for v in self.variables:
            if v.role == role:
                return v
        return None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v.levels) for v in self.variables)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def outcome(self) -> str | None:
        v = self._role_var(OUTCOME)
        return None if v is None else v.name

    @property
    def exposure(self) -> str | None:
        v = self._role_var(EXPOSURE)
        return None if v is None else v.name

    @property
    def confounders(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.role == CONFOUNDER)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(f"unknown variable {name!r}")

    def axis(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise UnknownVariable(f"unknown variable {name!r}")

    def ordered(self, names: Iterable[str]) -> tuple[str, ...]:
        """``names`` validated, de-duplicated and put in schema order."""
        wanted = set(names)
        for n in wanted:
            self.axis(n)
        return tuple(n for n in self.names if n in wanted)

    def sub(self, names: Iterable[str]) -> "Schema":
        keep = self.ordered(names)
        if not keep:
            raise SchemaError("a marginal must keep at least one variable")
        return Schema(
            tuple(self.variable(n) for n in keep),
            self.event_level,
            self.reference_exposure,
        )

    def same_domain(self, other: "Schema") -> bool:
        return [(v.name, v.levels) for v in self.variables] == [
            (v.name, v.levels) for v in other.variables
        ]

    def require_study(self) -> None:
        if self.outcome is None or self.exposure is None:
            raise SchemaError("schema needs exactly one outcome and one exposure variable")

    def cells(self) -> Iterable[tuple[str, ...]]:
        """Level tuples in row-major order."""
        return itertools.product(*(v.levels for v in self.variables))


@dataclass(frozen=True, eq=False)
class Table:
    schema: Schema
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.cells, dtype=float)
        if arr.size != self.schema.size:
            raise SchemaError(
                f"{arr.size} cells given for a domain of size {self.schema.size}"
            )
        arr = arr.reshape(self.schema.shape)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("table cells must be finite and non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)
        self._validate()

    def _validate(self):
        pass

    @property
    def names(self) -> tuple[str, ...]:
        return self.schema.names

    @property
    def flat(self) -> np.ndarray:
        return self.cells.reshape(-1)

    def total(self) -> float:
        return float(self.cells.sum())

    def __getitem__(self, levels) -> float:
        """Cell lookup by a ``{name: level}`` mapping or a full level tuple."""
        if isinstance(levels, dict):
            if set(levels) != set(self.names):
                raise SchemaError("cell lookup needs a level for every variable")
            levels = tuple(levels[n] for n in self.names)
        idx = tuple(v.index(lv) for v, lv in zip(self.schema.variables, levels))
        return float(self.cells[idx])

    def with_cells(self, cells) -> "Table":
        return Table(self.schema, cells)

    def transposed(self, names: Sequence[str]) -> np.ndarray:
        """Cells with axes permuted into the order of ``names``."""
        if sorted(names) != sorted(self.names):
            raise SchemaMismatch(f"cannot reorder {self.names} as {tuple(names)}")
        return np.transpose(self.cells, [self.schema.axis(n) for n in names])


class Distribution(Table):
    """A table of total mass one."""

    def _validate(self):
        if abs(self.total() - 1.0) > MASS_TOL:
            raise ZeroMass(f"distribution mass {self.total()!r} differs from 1")

    def with_cells(self, cells) -> "Distribution":
        return Distribution(self.schema, cells)


def _like(t: Table, schema: Schema, cells) -> Table:
    cls = Distribution if isinstance(t, Distribution) else Table
    return cls(schema, cells)


def normalize(t: Table) -> Distribution:
    total = t.total()
    if total <= 0:
        raise ZeroMass("cannot normalize a table with zero mass")
    return Distribution(t.schema, t.cells / total)


def marginalize(d: Table, keep: Iterable[str]) -> Table:
    """Sum out every variable not in ``keep``; the result uses schema order."""
    names = d.schema.ordered(keep)
    sub = d.schema.sub(names)
    drop = tuple(i for i, n in enumerate(d.names) if n not in names)
    return _like(d, sub, d.cells.sum(axis=drop) if drop else d.cells)


def condition(d: Table, given: Iterable[str]) -> Table:
    """Conditional table ``d(rest | given)`` on the full domain of ``d``."""
    names = d.schema.ordered(given)
    drop = tuple(i for i, n in enumerate(d.names) if n not in names)
    denom = d.cells.sum(axis=drop, keepdims=True) if drop else d.cells
    if np.any(denom <= 0):
        raise ConditioningOnNull(f"conditioning on a zero-mass cell of {names}")
    return Table(d.schema, d.cells / denom)


def outer_product(a: Table, b: Table) -> Table:
    """Product table over the variables of ``a`` followed by those of ``b``."""
    overlap = set(a.names) & set(b.names)
    if overlap:
        raise OverlappingVariables(f"variables {sorted(overlap)} appear on both sides")
    variables = a.schema.variables + b.schema.variables
    schema = Schema(
        variables,
        a.schema.event_level or b.schema.event_level,
        a.schema.reference_exposure or b.schema.reference_exposure,
    )
    cells = np.multiply.outer(a.cells, b.cells)
    if isinstance(a, Distribution) and isinstance(b, Distribution):
        return Distribution(schema, cells)
    return Table(schema, cells)


def regularize(t: Table, epsilon: float = DEFAULT_PSEUDO_COUNT) -> Table:
    """Add a pseudo-count ``epsilon`` to every cell (no renormalization)."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return Table(t.schema, t.cells + epsilon)


def i_divergence(p: Table, f: Table) -> float:
    """``sum p log(p/f)`` in nats, with ``0 log 0 = 0``; inf outside support(f)."""
    if not p.schema.same_domain(f.schema):
        raise SchemaMismatch(f"domains differ: {p.names} vs {f.names}")
    pc, fc = p.flat, f.flat
    pos = pc > 0
    if np.any(fc[pos] <= 0):
        return math.inf
    d = float(np.sum(pc[pos] * np.log(pc[pos] / fc[pos])))
    return max(d, 0.0)


def uniform(schema: Schema) -> Distribution:
    return Distribution(schema, np.full(schema.shape, 1.0 / schema.size))
