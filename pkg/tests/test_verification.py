"""
Tests for the property suites.
"""

import numpy as np
import pytest

from src.core.exceptions import VerificationFailure
from src.optimization.verification import (
    CHECKS,
    FAMILIES,
    CheckResult,
    all_passed,
    ensure_passed,
    resolve_family,
    run_suite,
    summary_frame,
)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_family_passes(family):
    results = run_suite(family, samples=20, seed=3)
    failed = [(r.name, r.family, r.worst) for r in results if not r.passed]
    assert not failed
    assert all_passed(results)


def test_every_check_runs_somewhere():
    results = run_suite("all", samples=2, seed=1)
    assert {r.name for r in results} == {chk.name for chk in CHECKS}
    assert {r.family for r in results} == {c.label for c in resolve_family("all")}


def test_kind_restricted_checks():
    results = run_suite("all", samples=2, seed=1, checks=["lorentz_plane_factorization", "phi_fast_path"])
    assert {r.family for r in results if r.name == "lorentz_plane_factorization"} == {"lorentz(2)"}
    assert "nonneg" not in {r.family for r in results if r.name == "phi_fast_path"}


def test_results_do_not_depend_on_selection():
    alone = run_suite("lorentz", samples=5, seed=9, checks=["exchange_rule"])
    together = run_suite("lorentz", samples=5, seed=9)
    by_key = {(r.name, r.family): r.worst for r in together}
    for r in alone:
        assert by_key[(r.name, r.family)] == r.worst


def test_summary_frame_orders_failures_first():
    results = [
        CheckResult("b_check", "nonneg", 10, 0.0, 1e-9, True),
        CheckResult("a_check", "psd(2)", 10, 1.0, 1e-9, False),
    ]
    frame = summary_frame(results)
    assert list(frame.columns) == ["check", "cone", "samples", "worst", "tolerance", "passed", "errors"]
    assert frame.iloc[0]["check"] == "a_check"
    assert not all_passed(results)
    with pytest.raises(VerificationFailure) as info:
        ensure_passed(results)
    assert info.value.context["failed"] == ["a_check@psd(2)"]
    ensure_passed(results[:1])
    assert summary_frame([]).empty


def test_unknown_names_are_rejected():
    with pytest.raises(ValueError):
        resolve_family("exotic")
    with pytest.raises(ValueError):
        run_suite("nonneg", samples=1, checks=["no_such_check"])


def test_worst_violation_is_finite_and_nonnegative():
    for result in run_suite("psd", samples=3, seed=4):
        assert np.isfinite(result.worst)
        assert result.worst >= 0.0
        assert result.errors == 0
