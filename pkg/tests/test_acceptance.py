"""Every acceptance criterion at its stated size and tolerance.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary under "acceptance criteria".
"""

from functools import partial

import pytest

import rqmc.estimators as estimators
from rqmc import acceptance
from rqmc.acceptance import CRITERIA, run_criterion

from conftest import VERDICT_LINES

FAST = {num for num, _, _, quick in CRITERIA if quick}


@pytest.mark.parametrize("number", [num for num, *_ in CRITERIA],
                         ids=[f"c{num:02d}_{title.replace(' ', '_')}" for num, title, *_ in CRITERIA])
def test_criterion(number):
    verdict = run_criterion(number)
    line = verdict.line()
    print(line)
    VERDICT_LINES.append(line)
    assert verdict.passed, line


def test_midpoint_lhs_mutation_is_detected(monkeypatch):
    monkeypatch.setattr(estimators, "latin_hypercube", partial(estimators.latin_hypercube, jitter=False))
    ok, detail = acceptance.planted_lhs_marginals()
    assert not ok, detail
    # midpoint LHS stays exactly unbiased for the box indicator and keeps a
    # nonzero variance on the non-additive exponential in d >= 2
    spec = lambda d: [estimators.EstimatorSpec("lhs", d)]
    assert acceptance._unbiasedness(spec, ["box"]) == []
    assert acceptance._unbiasedness(lambda d: spec(d) if d >= 2 else [], ["exp_sum"]) == []


def test_quick_suite_membership():
    assert acceptance.suite("quick") == sorted(FAST)
    assert acceptance.suite("full") == list(range(1, 15))
    with pytest.raises(ValueError):
        acceptance.suite("medium")
