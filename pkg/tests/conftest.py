from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ledger_obata.metric_core import TriangularMetric
from ledger_obata.solver import SolverOptions, run_multistart

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((DATA / "oracle_values.json").read_text())


@pytest.fixture(scope="session")
def census_n2():
    return run_multistart(2, SolverOptions(starts=2000, seed=42))


@pytest.fixture(scope="session")
def census_n3():
    return run_multistart(3, SolverOptions(starts=20000, seed=42))


def random_triangular(rng: np.random.Generator, n: int, diag=(0.3, 3.0), off=2.0) -> np.ndarray:
    a = np.tril(rng.uniform(-off, off, size=(n, n)), -1)
    a[np.diag_indices(n)] = rng.uniform(*diag, size=n)
    return a


@st.composite
def triangular_metrics(draw, min_n=1, max_n=5, diag=(0.3, 3.0), off=2.0):
    n = draw(st.integers(min_n, max_n))
    d = draw(st.lists(st.floats(*diag), min_size=n, max_size=n))
    m = n * (n - 1) // 2
    lo = draw(st.lists(st.floats(-off, off), min_size=m, max_size=m))
    a = np.zeros((n, n))
    a[np.diag_indices(n)] = d
    a[np.tril_indices(n, -1)] = lo
    return TriangularMetric(a)


def table_row(k: int, n: int = 3):
    """Reference row ``k`` (1-based reference numbering) as a frame."""
    from ledger_obata.metric_core import from_ratio_coords
    from ledger_obata.reference import reference_rows

    row = next(r for r in reference_rows(n) if r.index == k)
    return from_ratio_coords(row.coords)


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


# -- acceptance reporting ------------------------------------------------------
# Tests marked ``criterion(k, title)`` are tallied per criterion and summarized
# at the end of the run, one PASS/FAIL line each.

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    k, title = mark.args
    entry = _CRITERIA.setdefault(k, {"title": title, "passed": 0, "failed": []})
    if rep.when == "call" and rep.passed:
        entry["passed"] += 1
    elif rep.failed or rep.skipped:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        e = _CRITERIA[k]
        if e["failed"]:
            terminalreporter.write_line(f"criterion {k} FAIL  {e['title']}  (failing: {', '.join(e['failed'])})")
        else:
            terminalreporter.write_line(f"criterion {k} PASS  {e['title']}  ({e['passed']} checks)")
