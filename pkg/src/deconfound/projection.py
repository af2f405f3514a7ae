"""I-projections onto marginal constraint families, solved by IPF.

``ipf_project`` is the generic engine; the four study-level projections
(PR, DP(delta), MaxEnt logit, parity-preserving logit) only assemble the
constraint family and the seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InconsistentConstraints, NotConverged, SchemaError, SchemaMismatch
from .table import (
    DEFAULT_PSEUDO_COUNT,
    Distribution,
    Table,
    condition,
    i_divergence,
    marginalize,
    normalize,
    outer_product,
    regularize,
    uniform,
)


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    epsilon: float = DEFAULT_PSEUDO_COUNT

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")


@dataclass(frozen=True, eq=False)
class MarginalConstraint:
    """Fix the marginal of ``target.names`` to ``target``."""

    target: Distribution

    @property
    def names(self) -> tuple[str, ...]:
        return self.target.names


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    distribution: Distribution
    iterations: int
    residual: float
    divergence_from_seed: float
    converged: bool
    stalled: bool = False
    seed: Distribution | None = field(default=None, repr=False)

    def raise_for_status(self) -> "ProjectionResult":
        if self.converged:
            return self
        cls = InconsistentConstraints if self.stalled else NotConverged
        raise cls(
            f"IPF stopped after {self.iterations} sweeps with residual {self.residual:.3g}",
            residual=self.residual,
            iterations=self.iterations,
        )

    def diagnostics(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "divergence_from_seed": self.divergence_from_seed,
            "converged": self.converged,
        }


def _prepare(seed: Table, constraints: Sequence[MarginalConstraint]):
    prepared = []
    for c in constraints:
        names = seed.schema.ordered(c.names)
        if len(names) != len(c.names):
            raise SchemaError(f"constraint repeats variables: {c.names}")
        for n in names:
            if seed.schema.variable(n).levels != c.target.schema.variable(n).levels:
                raise SchemaMismatch(f"levels of {n!r} differ between seed and constraint")
        axes = tuple(i for i, n in enumerate(seed.names) if n not in names)
        target = c.target.transposed(names).reshape(
            [s if n in names else 1 for n, s in zip(seed.names, seed.schema.shape)]
        )
        prepared.append((axes, target))
    return prepared


def _residual(q, prepared) -> float:
    return max(
        float(np.max(np.abs(q.sum(axis=axes, keepdims=True) - target))) for axes, target in prepared
    )


def ipf_project(
    seed: Distribution,
    constraints: Sequence[MarginalConstraint],
    cfg: SolverConfig = SolverConfig(),
) -> ProjectionResult:
    """Cyclic proportional fitting of ``seed`` to each constraint in turn.

    A sweep rescales the current table once per constraint, in the listed
    order; the residual (max-abs marginal error over all constraints) is
    measured after every full sweep.  Non-convergence is reported through
    ``converged=False``; ``stalled`` marks a residual that stopped
    decreasing, the usual symptom of an infeasible family.
    """
    prepared = _prepare(seed, constraints)
    q = np.array(seed.cells, dtype=float)
    history = []
    residual = np.inf
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        for axes, target in prepared:
            m = q.sum(axis=axes, keepdims=True) if axes else q
            ratio = np.divide(target, m, out=np.zeros_like(m, dtype=float), where=m > 0)
            q = q * ratio
        residual = _residual(q, prepared) if prepared else 0.0
        history.append(residual)
        if residual <= cfg.tolerance:
            break
    converged = residual <= cfg.tolerance
    stalled = False
    if not converged and len(history) >= 10:
        earlier = history[int(len(history) * 0.9) - 1]
        stalled = residual >= 0.5 * earlier
    total = q.sum()
    if total > 0:
        q = q / total
    dist = Distribution(seed.schema, q)
    return ProjectionResult(
        distribution=dist,
        iterations=it,
        residual=float(residual),
        divergence_from_seed=i_divergence(dist, seed),
        converged=bool(converged),
        stalled=stalled,
        seed=seed,
    )


def _study_seed(f: Table, cfg: SolverConfig) -> Distribution:
    f.schema.require_study()
    if not f.schema.confounders:
        raise SchemaError("projection needs at least one confounder variable")
    return normalize(regularize(f, cfg.epsilon))


def _parity_marginal(f: Distribution) -> Distribution:
    """``f_X (x) f_S`` over exposure and the joint confounder profile."""
    s = f.schema
    fx = marginalize(f, [s.exposure])
    fs = marginalize(f, s.confounders)
    return outer_product(fx, fs)


def _exposure_profile_names(f: Table) -> tuple[str, ...]:
    return f.schema.ordered([f.schema.exposure, *f.schema.confounders])


def _realism(f: Distribution) -> MarginalConstraint:
    return MarginalConstraint(marginalize(f, [f.schema.outcome, *f.schema.confounders]))


def _mixture(a: Distribution, b: Distribution, delta: float) -> Distribution:
    names = a.names
    cells = delta * a.cells + (1.0 - delta) * b.transposed(names)
    return Distribution(a.schema, cells)


def pr_projection(f: Table, cfg: SolverConfig = SolverConfig()) -> ProjectionResult:
    """Closest study to ``f`` with exposure independent of the confounder profile
    and the outcome-confounder marginal of ``f`` left intact.

    ``f`` may hold counts or probabilities; ``cfg.epsilon`` is added to its
    cells before normalizing, so pass counts to get count-scale pseudo-counts.
    """
    seed = _study_seed(f, cfg)
    # exposure-profile constraint last: its one-way marginals come out exact
    constraints = [_realism(seed), MarginalConstraint(_parity_marginal(seed))]
    return ipf_project(seed, constraints, cfg)


def dp_projection(f: Table, delta: float, cfg: SolverConfig = SolverConfig()) -> ProjectionResult:
    """Projection whose exposure-profile marginal mixes parity and observed disparity.

    ``delta = 0`` keeps the observed ``f_{X,S}``; ``delta = 1`` is the PR-projection.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    seed = _study_seed(f, cfg)
    observed = marginalize(seed, _exposure_profile_names(seed))
    target = _mixture(_parity_marginal(seed), observed, delta)
    return ipf_project(seed, [_realism(seed), MarginalConstraint(target)], cfg)


def logit_maxent(f: Table, cfg: SolverConfig = SolverConfig()) -> ProjectionResult:
    """Main-effects logistic model as the MaxEnt distribution closest to uniform.

    Matches the outcome's pairwise marginal with the exposure and with each
    confounder separately, plus the full exposure-confounder joint.
    """
    ref = _study_seed(f, cfg)
    s = ref.schema
    constraints = [MarginalConstraint(marginalize(ref, [s.outcome, s.exposure]))]
    constraints += [MarginalConstraint(marginalize(ref, [s.outcome, c])) for c in s.confounders]
    constraints.append(MarginalConstraint(marginalize(ref, _exposure_profile_names(ref))))
    return ipf_project(uniform(s), constraints, cfg)


def parity_logit(l: Table, f: Table) -> Distribution:
    """``l(y | x, s) * f_X(x) * f_S(s)``: the model's conditional on a parity design."""
    l.schema.require_study()
    if not l.schema.same_domain(f.schema):
        raise SchemaMismatch("model and data live on different domains")
    fd = normalize(f)
    cond = condition(normalize(l), _exposure_profile_names(l))
    parity = _parity_marginal(fd)
    weights = parity.transposed(_exposure_profile_names(l))
    shape = [n if name != l.schema.outcome else 1 for name, n in zip(l.names, l.schema.shape)]
    return normalize(Table(l.schema, cond.cells * weights.reshape(shape)))
