"""Confounder analysis of three-way contingency tables via information projections."""
from .errors import *  # noqa: F401,F403
from .table import (
    CONFOUNDER,
    EXPOSURE,
    OUTCOME,
    Distribution,
    Schema,
    Table,
    Variable,
    condition,
    i_divergence,
    marginalize,
    normalize,
    outer_product,
    regularize,
    uniform,
)
from .sampling import (
    SampleCounts,
    asymptotic_log_hypergeometric,
    log_hypergeometric,
    log_multinomial,
)
from .projection import (
    MarginalConstraint,
    ProjectionResult,
    SolverConfig,
    dp_projection,
    ipf_project,
    logit_maxent,
    parity_logit,
    pr_projection,
)
from .estimators import (
    EffectReport,
    effect_report,
    effect_reports,
    mh_or,
    mh_rr,
    odds,
    stratified_or,
    stratified_rr,
    two_way_or,
    two_way_rr,
)
from .flow import SweepRecord, delta_sweep
from .csvio import read_counts, write_counts

__version__ = "0.1.0"
