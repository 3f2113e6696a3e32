"""Acceptance criteria 1-7.

Each test prints one ``PASS``/``FAIL`` line, repeated in the
"acceptance criteria" section of the pytest summary.
"""
import os

import pytest

from dadist.suites import LANDMARK_ENV, run_suite


def report(log, number, title, rep, extra=""):
    checks = [c for c in rep.checks if not c.expected_failure]
    failed = [c.name for c in rep.checks if not c.ok]
    status = "PASS" if rep.passed else "FAIL"
    line = (f"{status} criterion {number}: {title} "
            f"({len(checks) - len([c for c in checks if not c.passed])}/{len(checks)} checks"
            f"{extra}, {rep.seconds:.0f}s)")
    if failed:
        line += " failing: " + ", ".join(failed[:5])
    print(line)
    log.append(line)
    return failed


def test_criterion_1_normalization(acceptance_log):
    rep = run_suite("normalization")
    worst = max(c.value for c in rep.checks if c.name.startswith("mc "))
    failed = report(acceptance_log, 1, "densities integrate to one", rep,
                    f", worst Monte Carlo deviation {worst:.4f}")
    assert not failed


def test_criterion_2_jacobians(acceptance_log):
    rep = run_suite("jacobians")
    alt = [c for c in rep.checks if c.expected_failure]
    extra = "; alternative exponent fails as documented: " + (
        "yes" if all(not c.passed for c in alt) else "no")
    failed = report(acceptance_log, 2, "closed-form vs finite-difference Jacobians", rep, extra)
    assert not failed


def test_criterion_3_reductions(acceptance_log):
    rep = run_suite("reductions")
    failed = report(acceptance_log, 3, "classical reductions", rep)
    assert not failed


def test_criterion_4_kernel_invariance(acceptance_log):
    rep = run_suite("kernels")
    pmin = min(c.value for c in rep.checks if "source=" in c.name)
    failed = report(acceptance_log, 4, "kernel invariance of marginals", rep,
                    f", smallest KS p-value {pmin:.3f}")
    assert not failed


def test_criterion_5_algebra(acceptance_log):
    rep = run_suite("algebra")
    failed = report(acceptance_log, 5, "quaternion algebra identities", rep)
    assert not failed


def test_criterion_6_estimation(acceptance_log):
    rep = run_suite("estimation")
    med = {c.name: c.value for c in rep.checks if c.name.startswith("median")}
    extra = ", median rel. errors " + ", ".join(f"{v:.3f}" for v in med.values())
    failed = report(acceptance_log, 6, "parameter recovery", rep, extra)
    assert not failed


def test_criterion_7_landmark_table(acceptance_log):
    if not os.environ.get(LANDMARK_ENV):
        line = (f"FAIL criterion 7: landmark table not reproduced; the external landmark "
                f"data are not available (set {LANDMARK_ENV}); criterion 6 stands in")
        print(line)
        acceptance_log.append(line)
        pytest.xfail("external landmark data not available")
    rep = run_suite("landmarks")
    failed = report(acceptance_log, 7, "landmark table", rep)
    assert not failed
