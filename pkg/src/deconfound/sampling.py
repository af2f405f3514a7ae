"""Multinomial and hypergeometric sampling log-likelihoods of count tables.

All factorials go through ``gammaln``; at population sizes of 1e8 and
beyond direct factorials overflow long before the result does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import InfeasibleSample, NonpositiveCell, SchemaMismatch, SupportViolation
from .table import Schema, Table, i_divergence


@dataclass(frozen=True, eq=False)
class SampleCounts:
    schema: Schema
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.size != self.schema.size:
            raise SchemaMismatch(f"{arr.size} counts for a domain of size {self.schema.size}")
        if not np.all(arr == np.round(arr)) or np.any(arr < 0):
            raise ValueError("sample counts must be non-negative integers")
        arr = np.asarray(np.round(arr), dtype=np.int64).reshape(self.schema.shape)
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @classmethod
    def from_table(cls, t: Table) -> "SampleCounts":
        return cls(t.schema, t.cells)

    @property
    def N(self) -> int:
        return int(self.counts.sum())


def _log_factorial(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def _log_binom(n, k):
    return _log_factorial(n) - _log_factorial(k) - _log_factorial(np.asarray(n) - np.asarray(k))


def log_multinomial(sample: SampleCounts, f: Table) -> float:
    """``log( N! prod f^n / n! )``."""
    if not sample.schema.same_domain(f.schema):
        raise SchemaMismatch("sample and distribution live on different domains")
    n = sample.counts.reshape(-1)
    p = f.flat
    pos = n > 0
    if np.any(p[pos] <= 0):
        raise SupportViolation("sample has counts where the sampling distribution is zero")
    val = _log_factorial(sample.N) - np.sum(_log_factorial(n))
    val += np.sum(n[pos] * np.log(p[pos]))
    return float(val)


def log_hypergeometric(sample: SampleCounts, population: SampleCounts) -> float:
    """``log( prod C(M f, N p) / C(M, N) )`` for a draw without replacement."""
    if not sample.schema.same_domain(population.schema):
        raise SchemaMismatch("sample and population live on different domains")
    n = sample.counts.reshape(-1)
    m = population.counts.reshape(-1)
    if np.any(n > m):
        raise InfeasibleSample("sample exceeds the population in some cell")
    val = np.sum(_log_binom(m, n)) - _log_binom(population.N, sample.N)
    return float(val)


def asymptotic_log_hypergeometric(p: Table, f: Table, N) -> float:
    """Leading terms of the large-population expansion of the hypergeometric.

    ``-N D(p||f) - (|D|-1)/2 log(2 pi N) - 1/2 sum log p``, with the sum over
    every cell of the domain.  ``N`` may be any positive real.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    pc = p.flat
    if np.any(pc <= 0):
        raise NonpositiveCell("the expansion needs a strictly positive p")
    size = p.schema.size
    return float(
        -N * i_divergence(p, f)
        - 0.5 * (size - 1) * math.log(2.0 * math.pi * N)
        - 0.5 * np.sum(np.log(pc))
    )
