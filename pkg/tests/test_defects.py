import pytest

from defect_charges import reference as R
from defect_charges.defects import (
    _nilpotent_cube_check,
    all_contributions,
    bt_number_alpha_check,
    conservation_with_defect,
    defect_charges,
    defect_expand,
    defect_sum_rule_gt,
    eliminate_boundary,
    formal_conjugate,
    phase_to_exp,
    zero_boundary,
)
from defect_charges.models import ALPHA, build_model, tilde_map
from defect_charges.riccati import RiccatiError, conserved_flux, solve_riccati
from defect_charges.symexpr import SymExpr, expi, param, rewrite_alpha, sym
from defect_charges.verify import DEFECT_CONSERVATION

MODELS = ("BT", "GT", "SG")


@pytest.fixture(scope="module")
def contributions():
    return {n: all_contributions(build_model(n), 2) for n in MODELS}


@pytest.mark.parametrize("name", MODELS)
def test_contributions_match_printed(name, contributions):
    for key, want in R.DEFECT[name].items():
        assert contributions[name][key].value == want, key


def test_sg_rejected_phases_differ(contributions):
    for key, wrong in R.SG_DEFECT_REJECTED.items():
        assert contributions["SG"][key].value != wrong


@pytest.mark.parametrize("name", MODELS)
def test_contributions_are_even(name, contributions):
    for c in contributions[name].values():
        if c.value.terms:
            assert c.value.parity() == 0


@pytest.mark.parametrize("name", MODELS)
def test_phase_only_at_order_zero(name, contributions):
    for (j, b, k), c in contributions[name].items():
        if k:
            assert not c.phase.terms


@pytest.mark.parametrize("name", MODELS)
def test_branch_symmetry(name, contributions):
    model = build_model(name)
    for b in ("inf", "zero"):
        for k in range(3):
            sign = -1 if (name, k) == ("GT", 2) else 1
            d1, d2 = contributions[name][(1, b, k)].value, contributions[name][(2, b, k)].value
            assert formal_conjugate(model, d1) == sign * d2, (b, k)


@pytest.mark.parametrize("name", MODELS)
def test_defect_charges_match_printed(name):
    got = defect_charges(build_model(name))
    for key, want in R.DEFECT_CHARGES[name].items():
        assert got[key].value == want, key


def test_bt_number_is_pure_alpha_phase():
    bt = build_model("BT")
    charges = defect_charges(bt)
    assert not charges["N"].value.terms
    assert charges["N"].log_part == R.BT_NUMBER_ALPHA_COEFF * SymExpr.atom(ALPHA)
    assert not bt_number_alpha_check(bt, charges).terms


def test_phase_to_exp():
    theta = SymExpr.atom(ALPHA) * 2
    assert phase_to_exp(theta) == expi(ALPHA, 2)
    assert phase_to_exp(theta, -1) == expi(ALPHA, -2)
    with pytest.raises(ValueError):
        phase_to_exp(param("g") * SymExpr.atom(ALPHA))


def test_sg_vacuum_energy():
    sg = build_model("SG")
    sigma, m = param("sigma"), param("m")
    e = defect_charges(sg)["E"].value
    assert zero_boundary(e) == 2 * m * (sigma + sigma.inverse())
    assert not zero_boundary(defect_charges(sg)["P"].value - 2 * m * (sigma - sigma.inverse())).terms


def test_gt_charges_vanish_without_fields():
    for c in defect_charges(build_model("GT")).values():
        assert not zero_boundary(c.value).terms


def test_gt_sum_rules(contributions):
    assert all(not r.terms for r in defect_sum_rule_gt(contributions["GT"]))


def test_gt_log_argument_is_nilpotent_to_third_order():
    s1 = sym("psi1", odd=True)
    s2 = sym("psi2", odd=True)
    _nilpotent_cube_check({-1: s1 * s2})
    with pytest.raises(RiccatiError):
        _nilpotent_cube_check({-1: sym("phi1")})


@pytest.mark.parametrize("name", ("BT", "GT"))
def test_boundary_elimination(name):
    model = build_model(name)
    charges = defect_charges(model)
    for key, want in R.DEFECT_ELIMINATED[name].items():
        got = eliminate_boundary(model, charges[key].value)
        assert not any(a.kind == "boundary" for a in got.atoms())
        assert not rewrite_alpha(got - want, model).terms, key


def test_sg_elimination_is_identity():
    sg = build_model("SG")
    e = defect_charges(sg)["E"].value
    assert eliminate_boundary(sg, e) == e


@pytest.mark.parametrize("name", MODELS)
def test_defect_restores_conservation(name):
    model = build_model(name)
    for j, b, k in DEFECT_CONSERVATION[name]:
        assert not conservation_with_defect(model, j, b, k).terms, (j, b, k)


@pytest.mark.parametrize("name", MODELS)
def test_flux_jump_alone_is_not_conserved(name):
    """Without the defect contribution the bulk flux jump is left over."""
    model = build_model(name)
    j, b, k = DEFECT_CONSERVATION[name][0]
    flux = conserved_flux(solve_riccati(model, j, b, max(k, 2)), k)
    assert model.reduce(flux - tilde_map(flux)).terms


def test_fault_breaks_defect_conservation():
    model = build_model("SG", fault="k-sign")
    assert any(conservation_with_defect(model, j, b, k).terms for j, b, k in DEFECT_CONSERVATION["SG"])


def test_expand_rejects_bad_branch():
    with pytest.raises(ValueError):
        defect_expand(build_model("BT"), 1, "middle")
