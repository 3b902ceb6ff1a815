import pytest
from hypothesis import given, settings, strategies as st

from defect_charges import reference as R
from defect_charges.golden import load_fixture, table_from_json
from defect_charges.models import build_model
from defect_charges.riccati import (
    bulk_charges,
    charge_orders,
    combine,
    conservation_residual,
    conserved_density,
    densities,
    equal_mod_total_derivative,
    gt_sum_rule_residuals,
    ibp_normal_form,
    is_total_derivative,
    riccati_residual,
    solve_riccati,
)
from defect_charges.symexpr import I, param, sym

from .oracles.truncated_series import bt_gamma21_series, to_symexpr

MODELS = ("BT", "GT", "SG")


@pytest.mark.parametrize("name", MODELS)
def test_printed_gamma_coefficients(name):
    model = build_model(name)
    for (branch, i, j, k), want in R.GAMMA[name].items():
        assert solve_riccati(model, j, branch, 3).gamma(i, k) == want, (branch, i, j, k)


def test_rejected_gt_variants_differ():
    gt = build_model("GT")
    for (branch, i, j, k), wrong in R.GT_GAMMA_REJECTED.items():
        assert solve_riccati(gt, j, branch, 3).gamma(i, k) != wrong


def test_gt_aux_symbols():
    gt = build_model("GT")
    rules = {}
    for b in ("inf", "zero"):
        for j in (1, 2, 3):
            sol = solve_riccati(gt, j, b, 3)
            for aux in sol.aux.values():
                assert aux.parity == aux.dx_rule.parity()
            rules.update({a.name: r for a, r in sol.aux_rules()[0].items()})
    for name, want in R.GT_AUX_DX.items():
        assert rules[name] == want, name


def test_bt_and_sg_need_no_aux():
    for name in ("BT", "SG"):
        model = build_model(name)
        for b in ("inf", "zero"):
            for j in (1, 2):
                assert not solve_riccati(model, j, b, 4).aux


def test_sympy_oracle_agrees_with_solver():
    series = bt_gamma21_series(degree=6)
    sol = solve_riccati(build_model("BT"), 1, "inf", 6)
    for k in range(1, 7):
        assert sol.gamma(2, k) == to_symexpr(series[k]), k


def test_derived_fourth_and_fifth_order_golden():
    table = table_from_json(load_fixture("models", "bt_gamma21_derived.json")["gamma"])
    sol = solve_riccati(build_model("BT"), 1, "inf", 6)
    assert not table[("inf", 2, 1, 4)].terms
    assert table[("inf", 2, 1, 5)].terms
    for (b, i, j, k), want in table.items():
        assert sol.gamma(i, k) == want


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(MODELS), st.sampled_from(("inf", "zero")), st.integers(1, 3), st.integers(1, 4))
def test_series_residual_vanishes_below_truncation(name, branch, j, K):
    model = build_model(name)
    j = min(j, model.size)
    sol = solve_riccati(model, j, branch, K)
    top = max(k for _, k in sol.coeffs)
    for direction in ("x", "t"):
        for P in range(2 - top, 3):
            for i in range(1, model.size + 1):
                if i != j:
                    assert not riccati_residual(sol, i, P, direction).terms, (direction, P, i)


@pytest.mark.parametrize("name", MODELS)
def test_every_density_is_conserved(name):
    model = build_model(name)
    for b in ("inf", "zero"):
        for j in range(1, model.size + 1):
            sol = solve_riccati(model, j, b, 3)
            for k in range(3):
                assert not conservation_residual(sol, k).terms, (b, j, k)


@pytest.mark.parametrize("name", MODELS)
def test_densities_match_printed_forms(name):
    model = build_model(name)
    got = densities(model, charge_orders(model))
    for key, want in R.DENSITIES[name].items():
        assert equal_mod_total_derivative(got[key], want), key


def test_bt_rejected_density_sign():
    got = densities(build_model("BT"), (0,))
    wrong = R.BT_DENSITIES_REJECTED[(2, "zero", 0)]
    assert not equal_mod_total_derivative(got[(2, "zero", 0)], wrong)


def test_examples():
    g, m = param("g"), param("m")
    bt, gt, sg = (build_model(n) for n in MODELS)
    rho = sym("phi1", True) * sym("phi1") + sym("phi2", True) * sym("phi2")
    assert conserved_density(solve_riccati(bt, 1, "inf", 2), 0) == I * g / 4 * rho
    assert equal_mod_total_derivative(conserved_density(solve_riccati(gt, 1, "inf", 2), 2),
                                      R.GT_DENSITIES[(1, "inf", 2)])
    assert equal_mod_total_derivative(conserved_density(solve_riccati(sg, 2, "zero", 2), 1),
                                      R.SG_DENSITIES[(2, "zero", 1)])
    assert bulk_charges(bt)["N"] == rho
    assert m is not None


@pytest.mark.parametrize("name", MODELS)
def test_charges_match_printed_forms(name):
    got = bulk_charges(build_model(name))
    for key, want in R.CHARGES[name].items():
        assert equal_mod_total_derivative(got[key], want), key


def test_charges_are_not_trivially_equal():
    # E and P differ by more than a total derivative
    got = bulk_charges(build_model("SG"))
    assert not equal_mod_total_derivative(got["E"], got["P"])


def test_gt_sum_rules():
    for r in gt_sum_rule_residuals(build_model("GT")):
        assert is_total_derivative(r)


def test_gt_third_column_vanishes_at_order_zero():
    I0 = densities(build_model("GT"), (0,))
    for b in ("inf", "zero"):
        assert not I0[(3, b, 0)].terms
        assert not (I0[(1, b, 0)] + I0[(2, b, 0)]).terms


def test_combine_needs_all_orders():
    with pytest.raises(KeyError):
        combine(build_model("BT"), {})


# --------------------------------------------------------------------------- integration by parts

fields = [sym("phi1"), sym("phi1", True), sym("phi2"), sym("phi2", True)]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-3, 3)), min_size=1, max_size=4))
def test_total_derivatives_normalize_to_zero(spec):
    model = build_model("BT")
    e = sum((c * fields[a] * fields[b] for a, b, c in spec), start=fields[0] * 0)
    assert is_total_derivative(model.dx(e))
    assert not ibp_normal_form(model.dx(e)).terms


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3))
def test_ibp_normal_form_is_idempotent(a, b):
    model = build_model("BT")
    e = fields[a] * model.dx(fields[b]) + fields[b] * fields[a]
    once = ibp_normal_form(e)
    assert ibp_normal_form(once) == once
    assert equal_mod_total_derivative(e, once)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(-2, 2))
def test_ibp_normal_form_ignores_added_total_derivative(a, b, c, k):
    model = build_model("BT")
    e = fields[a] * model.dx(model.dx(fields[b]))
    w = k * fields[c] * model.dx(fields[a]) * fields[b]
    assert ibp_normal_form(e + model.dx(w)) == ibp_normal_form(e)


def test_ibp_normal_form_with_exponentials():
    from defect_charges.symexpr import Atom, expi

    sg = build_model("SG")
    phi = sym("phi")
    e = sg.dx(phi) ** 2 * expi(Atom("phi"), 1)
    w = sg.dx(phi) * expi(Atom("phi"), 1)
    assert ibp_normal_form(e + sg.dx(w)) == ibp_normal_form(e)
    assert not ibp_normal_form(sg.dx(expi(Atom("phi"), 1) * phi)).terms


@pytest.mark.parametrize("name", MODELS)
def test_canonical_forms_match_printed(name):
    model = build_model(name)
    dens, charges = densities(model, charge_orders(model)), bulk_charges(model)
    for key, want in R.DENSITIES[name].items():
        assert ibp_normal_form(dens[key]) == ibp_normal_form(want), key
    for key, want in R.CHARGES[name].items():
        assert ibp_normal_form(charges[key]) == ibp_normal_form(want), key
