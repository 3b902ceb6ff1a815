from dataclasses import replace
import pytest

from defect_charges.models import (
    GT_X,
    ModelError,
    backlund_elimination_consistent,
    build_model,
    defect_gauge_residual,
    hermiticity_pairs,
    is_zero_matrix,
    mat_map,
    residual_report,
    zero_curvature_residual,
)
from defect_charges.symexpr import I, SymExpr, d_x, param, sym

MODELS = ("BT", "GT", "SG")
LAM = SymExpr.lam()


@pytest.mark.parametrize("name", MODELS)
def test_zero_curvature(name):
    assert is_zero_matrix(zero_curvature_residual(build_model(name)))


@pytest.mark.parametrize("name", MODELS)
def test_defect_gauge(name):
    Rt, Rx = defect_gauge_residual(build_model(name))
    assert is_zero_matrix(Rt) and is_zero_matrix(Rx)


@pytest.mark.parametrize("name", MODELS)
def test_k_sign_fault_breaks_gauge(name):
    Rt, Rx = defect_gauge_residual(build_model(name, fault="k-sign"))
    assert not (is_zero_matrix(Rt) and is_zero_matrix(Rx))
    assert residual_report(Rt) or residual_report(Rx)


@pytest.mark.parametrize("name", MODELS)
def test_backlund_relations_consistent(name):
    assert all(not r.terms for r in backlund_elimination_consistent(build_model(name)))


@pytest.mark.parametrize("name", MODELS)
def test_lambda_window(name):
    model = build_model(name)
    for M in (model.U, model.V):
        for row in M:
            for x in row:
                assert all(-2 <= k <= 2 for k in x.lam_powers())


def test_printed_entries():
    m, g = param("m"), param("g")
    bt = build_model("BT")
    rho = sym("phi2", True) * sym("phi2") - sym("phi1", True) * sym("phi1")
    assert bt.U[0][0] == I / 4 * (g * rho - m * (LAM ** 2 - LAM ** -2))
    gt = build_model("GT")
    assert gt.U[2][2] == I * m * (LAM ** 2 - LAM ** -2)
    sg = build_model("SG")
    assert sg.V[0][0] == -I / 4 * sym("phi", dx=1)


def test_gt_odd_entries():
    gt = build_model("GT")
    for i in range(3):
        for j in range(3):
            want = 1 if (i == 2) != (j == 2) else 0
            for x in (gt.U[i][j], gt.V[i][j]):
                if x.terms:
                    assert x.parity() == want


def test_bt_hermiticity_pairs():
    for lhs, rhs in hermiticity_pairs(build_model("BT")):
        assert lhs == rhs


def test_build_errors():
    with pytest.raises(ModelError):
        build_model("KdV")
    with pytest.raises(ModelError):
        build_model("BT", {"m": -1})
    with pytest.raises(ModelError):
        build_model("SG", {"sigma": 0})
    with pytest.raises(ModelError):
        build_model("GT", {"b": 1})
    with pytest.raises(ModelError):
        build_model("BT", fault="bogus")


def test_json_export_is_stable():
    a = build_model("GT").to_json()
    b = build_model("GT").to_json()
    assert a == b and a["size"] == 3


# --------------------------------------------------------------------------- printed variants that fail


def test_gt_psi1_dagger_equation_needs_dagger():
    """With -m psi2 in place of -m psi2+ the Lax pair is no longer flat."""
    gt = build_model("GT")
    s1d = sym("psi1", True, odd=True)
    key = next(a for a in gt.eom if a.name == "psi1" and a.dagger)
    m, g = param("m"), param("g")
    wrong = d_x(s1d) + I * (m * sym("psi2", odd=True) + g * sym("psi2", True, odd=True) * sym("psi2", odd=True) * s1d)
    assert is_zero_matrix(zero_curvature_residual(replace(gt, eom=dict(gt.eom))))
    broken = replace(gt, eom={**gt.eom, key: wrong})
    assert not is_zero_matrix(zero_curvature_residual(broken))


def test_gt_x_rule_needs_tilde_partner():
    gt = build_model("GT")
    rule = gt.backlund.dx_rules[GT_X]
    s2, t2 = sym("psi2", odd=True), sym("psi2", tilde=True, odd=True)
    printed = rule - I * param("m") / 2 * t2 + I * param("m") / 2 * s2
    bl = replace(gt.backlund, dx_rules={**gt.backlund.dx_rules, GT_X: printed})
    Rt, Rx = defect_gauge_residual(replace(gt, backlund=bl))
    assert is_zero_matrix(Rt)
    assert not is_zero_matrix(Rx)


def test_sg_printed_diagonal_phases_fail():
    sg = build_model("SG")
    K = [row[:] for row in sg.K]
    K[0][0], K[1][1] = K[1][1], K[0][0]
    Rt, Rx = defect_gauge_residual(replace(sg, K=K))
    assert not (is_zero_matrix(Rt) and is_zero_matrix(Rx))


def test_printed_gauge_form_fails():
    """dK/dx = U~K - UV (as printed) does not vanish for the BT defect matrix."""
    from defect_charges.models import mat_mul, mat_sub

    bt = build_model("BT")
    Rx = mat_sub(mat_map(bt.K, bt.dx), mat_sub(mat_mul(bt.U_tilde, bt.K), mat_mul(bt.U, bt.V)))
    Rx = mat_map(Rx, bt.reduce)
    assert not is_zero_matrix(Rx)
