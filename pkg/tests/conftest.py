import os
from pathlib import Path

import numpy as np
import pytest

from deconfound import SampleCounts, Schema, Table, Variable

HERE = Path(__file__).parent
DATA = HERE.parent / "data"

# Row-major over (Y, X, S): no event/event x control/intervention x A/B.
SYMMETRIC_COUNTS = (145, 55, 95, 5, 5, 95, 55, 145)

ACCEPTANCE_LINES = []

M_POP = 10**8
N_SAMPLE = 10**4


def symmetric_schema():
    return Schema.build(
        {"Y": ["no event", "event"], "X": ["control", "intervention"], "S": ["A", "B"]},
        outcome="Y", exposure="X", event_level="event", reference_exposure="control",
    )


def study_schema(n_strata=2, n_conf=1):
    """Binary Y and X followed by ``n_conf`` confounders of ``n_strata`` levels each."""
    levels = {"Y": ["n", "y"], "X": ["x0", "x1"]}
    for i in range(n_conf):
        levels[f"S{i}"] = [f"s{j}" for j in range(n_strata)]
    return Schema.build(levels, "Y", "X", "y", "x0")


def random_corpus(n, shape_strata, seed):
    """``n`` strictly positive count tables over Y x X x S."""
    rng = np.random.default_rng(seed)
    schema = study_schema(shape_strata)
    return [Table(schema, rng.uniform(0.5, 50.0, schema.size)) for _ in range(n)]


def expansion_corpus(floor, n=300, seed=7):
    """Population and sample tables of 2-4 cells, all cell probabilities >= ``floor``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        k = int(rng.integers(2, 5))
        fp, pp = rng.dirichlet(np.full(k, 2.0)), rng.dirichlet(np.full(k, 2.0))
        if min(fp.min(), pp.min()) < floor:
            continue
        pop = np.floor(fp * M_POP).astype(np.int64)
        pop[-1] += M_POP - pop.sum()
        smp = np.floor(pp * N_SAMPLE).astype(np.int64)
        smp[-1] += N_SAMPLE - smp.sum()
        schema = Schema((Variable("V", [f"c{i}" for i in range(k)]),))
        out.append((SampleCounts(schema, smp), SampleCounts(schema, pop)))
    return out


@pytest.fixture
def symmetric():
    return Table(symmetric_schema(), SYMMETRIC_COUNTS)


@pytest.fixture(scope="session")
def corpus():
    return random_corpus(100, 2, seed=20240601) + random_corpus(100, 4, seed=20240602)


def smoking_fixture():
    """Optional external data: count CSV plus a JSON role config with the same stem."""
    csv_path = os.environ.get("DECONFOUND_SMOKING_CSV", str(DATA / "smoking.csv"))
    cfg_path = os.path.splitext(csv_path)[0] + ".json"
    if os.path.exists(csv_path) and os.path.exists(cfg_path):
        return csv_path, cfg_path
    return None


class AcceptanceLog:
    """Collects one status line per criterion for the terminal summary."""

    def __call__(self, label, ok, detail=""):
        self._add("PASS" if ok else "FAIL", label, detail)
        return ok

    def skip(self, label, reason):
        self._add("SKIP", label, reason)

    @staticmethod
    def _add(status, label, detail):
        ACCEPTANCE_LINES.append(f"{status}  {label}  {detail}".rstrip())


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
