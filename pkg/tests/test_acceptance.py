"""Acceptance gate: one PASS/FAIL line per criterion at default settings.

The lines are printed as each criterion runs and repeated in the terminal
summary (see conftest.py), so they survive output capture.
"""

import json
import time

import pytest

from osmoflow.config import RunConfig
from osmoflow.verify import CRITERIA, run_acceptance

RESULTS = {}


@pytest.fixture(scope="module")
def results():
    t0 = time.perf_counter()
    out = {r.id: r for r in run_acceptance(RunConfig())}
    out["elapsed"] = time.perf_counter() - t0
    RESULTS.update(out)
    return out


@pytest.mark.parametrize("cid", range(1, len(CRITERIA) + 1))
def test_criterion(results, cid):
    res = results[cid]
    print(res.line())
    assert res.passed, res.line()


def test_runtime_budgets(results):
    # criterion 1 must finish within 30 s and criterion 8 within 2 min
    assert results[1].seconds < 30
    assert results[8].seconds < 120


def test_report_is_deterministic(results):
    again = run_acceptance(RunConfig(), only={5, 6, 10})
    first = [results[r.id].to_dict() for r in again]
    assert json.dumps(first, sort_keys=True) == json.dumps([r.to_dict() for r in again], sort_keys=True)
