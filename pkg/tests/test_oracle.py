import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defect_charges import reference as R
from defect_charges.graded import GradedElement, gr_mul, random_even, random_odd
from defect_charges.models import build_model
from defect_charges.oracle import (
    GradedPoint,
    OracleReport,
    PeriodicProfile,
    batched_mul,
    run_oracle,
)
from defect_charges.symexpr import sym

N = 6


@pytest.fixture(scope="module")
def small_run():
    gt = build_model("GT")
    return run_oracle(gt, samples=2, printed=R.GT_CHARGES, closed_forms=R.GT_DEFECT_CHARGES,
                      gammas=R.GT_GAMMA, densities=R.GT_DENSITIES)


def test_small_run_passes(small_run):
    assert small_run.ok(1e-10), small_run.worst
    for name in ("zero_curvature", "gauge", "riccati", "conservation", "defect_series",
                 "defect_closed_form", "defect_elimination", "charges_mod_dx", "densities_mod_dx"):
        assert name in small_run.worst


def test_fault_is_detected():
    report = run_oracle(build_model("GT", fault="k-sign"), samples=1)
    assert report.worst["gauge"] > 1e-3
    assert not report.ok()


def test_wrong_closed_form_is_detected():
    wrong = dict(R.GT_DEFECT_CHARGES)
    wrong["E"] = R.GT_DEFECT_CHARGES["P"]
    report = run_oracle(build_model("GT"), samples=1, closed_forms=wrong)
    assert report.worst["defect_closed_form"] > 1e-6


def test_report_accumulates_maximum():
    r = OracleReport()
    r.record("a", 1e-12)
    r.record("a", 3e-12)
    r.record("a", 2e-12)
    assert r.worst["a"] == 3e-12 and r.ok()
    r.record("b", 1.0)
    assert r.max_error == 1.0 and not r.ok()


def test_tilde_values_satisfy_elimination_rules():
    pt = GradedPoint(build_model("GT"), np.random.default_rng(3), N)
    pt.ev0(sym("psi1", tilde=True, odd=True))
    from defect_charges.oracle import backlund_error

    assert backlund_error(pt) < 1e-12


def test_periodic_integral_of_derivative_vanishes():
    prof = PeriodicProfile(np.random.default_rng(5), N)
    gt = build_model("GT")
    e = sym("psi1", True, odd=True) * sym("psi2", odd=True)
    assert np.abs(prof.integral(gt.dx(e))).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_batched_product_matches_scalar_product(seed):
    rng = np.random.default_rng(seed)
    xs = [random_odd(rng, N) + random_even(rng, N) for _ in range(6)]
    A = np.stack([x.coef for x in xs[:3]])
    B = np.stack([x.coef for x in xs[3:]])
    got = batched_mul(A, B, N)
    for row, a, b in zip(got, xs[:3], xs[3:]):
        assert gr_mul(a, b).allclose(GradedElement(N, row), atol=1e-12)
