"""Frozen fixtures against fresh computations.

Regenerate with ``python3 -m tests.oracles.freeze_fixtures`` only after a
deliberate change.
"""

import pytest

from defect_charges.defects import all_contributions, defect_charges, eliminate_boundary
from defect_charges.golden import load_fixture, table_from_json, table_to_json
from defect_charges.models import build_model
from defect_charges.riccati import bulk_charges, charge_orders, densities, solve_riccati

MODELS = ("BT", "GT", "SG")


@pytest.mark.parametrize("name", MODELS)
def test_model_export(name):
    assert build_model(name).to_json() == load_fixture("models", f"{name.lower()}.json")


@pytest.mark.parametrize("name", MODELS)
def test_derivation(name):
    model = build_model(name)
    data = load_fixture("models", f"{name.lower()}_derivation.json")
    for (b, i, j, k), want in table_from_json(data["gamma"]).items():
        assert solve_riccati(model, j, b, 3).gamma(i, k) == want, (b, i, j, k)
    assert table_to_json(densities(model, charge_orders(model))) == data["densities"]
    assert table_to_json(bulk_charges(model)) == data["charges"]


@pytest.mark.parametrize("name", MODELS)
def test_defects(name):
    model = build_model(name)
    data = load_fixture("defects", f"{name.lower()}.json")
    contrib = all_contributions(model, 2)
    charges = defect_charges(model, contrib)
    assert table_to_json({k: c.value for k, c in contrib.items()}) == data["contributions"]
    assert table_to_json({k: c.phase for k, c in contrib.items() if c.phase.terms}) == data["phases"]
    assert table_to_json({k: c.value for k, c in charges.items()}) == data["charges"]
    assert table_to_json({k: c.log_part for k, c in charges.items() if c.log_part.terms}) == data["log_parts"]
    if name != "SG":
        got = {k: eliminate_boundary(model, c.value) for k, c in charges.items() if k != "N"}
        assert table_to_json(got) == data["eliminated"]


def test_table_keys_roundtrip():
    table = table_from_json(load_fixture("models", "bt_gamma21_derived.json")["gamma"])
    assert set(table) == {("inf", 2, 1, 4), ("inf", 2, 1, 5)}
    assert table_from_json(table_to_json(table)) == table
