import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defect_charges.numsim import (
    CSV_COLUMNS,
    SBP4,
    ConfigError,
    LatticeConfig,
    alpha_of,
    convergence_slope,
    init,
    kink_residual,
    measure,
    run,
    time_reversal_error,
)


def sg(**kw):
    base = {"model": "SG", "L": 40.0, "n": 256, "t_end": 1.0}
    return LatticeConfig(**{**base, **kw})


def bt(**kw):
    base = {"model": "BT", "L": 40.0, "n": 256, "t_end": 1.0}
    return LatticeConfig(**{**base, **kw})


# --------------------------------------------------------------------------- configuration


@pytest.mark.parametrize(
    "data",
    [
        {"model": "KdV"},
        {"model": "SG", "n": 32},
        {"model": "SG", "n": 100.5},
        {"model": "SG", "L": -1},
        {"model": "SG", "dt": 1.0},
        {"model": "SG", "params": {"g": 1}},
        {"model": "SG", "far_boundary": "periodic"},
        {"model": "SG", "measure_every": 0},
        {"model": "SG", "initial_condition": {}},
        {"model": "SG", "colour": "red"},
        {"L": 10},
        [1, 2],
    ],
)
def test_invalid_configs_are_rejected(data):
    with pytest.raises(ConfigError):
        LatticeConfig.from_dict(data)


def test_default_step_and_bound():
    cfg = sg()
    assert cfg.dt == pytest.approx(0.25 * cfg.h)
    assert cfg.max_dt == pytest.approx(0.5 * cfg.h)
    LatticeConfig.from_dict({"model": "sg", "L": 40, "n": 256, "dt": 0.5 * 40 / 256})


def test_unknown_initial_condition(tmp_path):
    with pytest.raises(ConfigError):
        init(sg(initial_condition={"type": "bt_pulse"}))
    with pytest.raises(ConfigError):
        init(sg(initial_condition={"type": "sg_kink", "v": 1.2}))


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{model: SG")
    with pytest.raises(ConfigError):
        LatticeConfig.from_json(p)


def test_custom_data_needs_matching_grid(tmp_path):
    data = {"left": {"phi": [0.0] * 100, "phi_t": [0.0] * 100}, "right": {"phi": [0.0] * 100, "phi_t": [0.0] * 100}}
    (tmp_path / "ic.json").write_text(json.dumps(data))
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"model": "SG", "n": 256, "initial_condition": {"type": "custom", "file": "ic.json"}}))
    with pytest.raises(ConfigError, match="257"):
        init(LatticeConfig.from_json(cfg_path))


def test_custom_data_loads(tmp_path):
    n = 128
    x = np.linspace(0, 40, n + 1)
    blob = {"right": {"phi1_re": list(np.exp(-((x - 20) ** 2))), "phi2": [0.0] * (n + 1)},
            "left": {"phi1": [0.0] * (n + 1), "phi2": [0.0] * (n + 1)}}
    (tmp_path / "ic.json").write_text(json.dumps(blob))
    s = init(bt(n=n, defect=False, initial_condition={"type": "custom", "file": str(tmp_path / "ic.json")}))
    assert abs(s.right[0, n // 2] - 1) < 1e-12


# --------------------------------------------------------------------------- operator


def test_sbp_property():
    n, h = 64, 0.3
    D = SBP4(n, h)
    Hm = np.diag(D.weights)
    Qm = Hm @ D.matrix()
    B = np.zeros((n + 1, n + 1))
    B[0, 0], B[-1, -1] = -1, 1
    assert np.abs(Qm + Qm.T - B).max() < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2), st.floats(-2, 2))
def test_sbp_exact_on_low_degree(p, c):
    D = SBP4(40, 0.1)
    x = np.linspace(0, 4, 41)
    assert np.abs(D(c * x ** p) - c * p * x ** max(p - 1, 0) * (p > 0)).max() < 1e-9
    assert D.integrate(c * x ** p) == pytest.approx(c * 4 ** (p + 1) / (p + 1), abs=1e-9)


# --------------------------------------------------------------------------- initial data and measurement


def test_static_kink_satisfies_field_equation():
    x = np.linspace(-40, 40, 1025)
    assert kink_residual(x, 1.0, 0.0, 0.0) < 1e-6
    assert kink_residual(x, 1.3, 0.6, 2.0) < 1e-6


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_zero_field_sg_totals(sigma):
    report = run(sg(params={"sigma": sigma}, t_end=2.0))
    want = 2 * (sigma + 1 / sigma)
    for row in report.rows:
        assert row["E_D"] == pytest.approx(want, abs=1e-14)
        assert row["E_tot"] == pytest.approx(want, abs=1e-14)
        assert row["E_L"] == row["E_R"] == 0.0


def test_zero_field_bt_totals():
    """Only the field-free (m/g)(a +- 1/a) cos(2 alpha) terms of E_D, P_D survive, with alpha = 0."""
    cfg = bt(t_end=2.0)
    m, g, a = (cfg.params[k] for k in ("m", "g", "a"))
    for row in run(cfg).rows:
        assert row["N_tot"] == 0.0
        assert row["E_L"] == row["E_R"] == row["P_L"] == row["P_R"] == 0.0
        assert row["E_tot"] == pytest.approx(-m / g * (a + 1 / a), abs=1e-14)
        assert row["P_tot"] == pytest.approx(m / g * (a - 1 / a), abs=1e-14)


def test_zero_field_bt_without_defect_is_zero():
    for row in run(bt(t_end=2.0, defect=False)).rows:
        for k in ("N_tot", "E_tot", "P_tot"):
            assert row[k] == 0.0


def test_empty_pulse_has_trivial_defect():
    cfg = bt(initial_condition={"type": "bt_pulse", "amplitude": 0.0})
    s = init(cfg)
    assert s.X == 0
    assert alpha_of(s.X, cfg.params) == 0.0


def test_alpha_clamp_is_counted():
    flags = {}
    p = {"m": 1.0, "g": 1.0, "a": 1.0}
    assert alpha_of(3.0, p, flags) == pytest.approx(math.pi / 4)
    assert flags["arcsin_clamped"] == 1


def test_kink_energy_without_defect():
    v = 0.5
    cfg = LatticeConfig(model="SG", L=80.0, n=1024, t_end=0.0, defect=False,
                        initial_condition={"type": "sg_kink", "v": v, "x0": 0.0})
    row = measure(cfg, init(cfg))
    gamma = 1 / math.sqrt(1 - v * v)
    assert row["E_tot"] == pytest.approx(8 * gamma, rel=1e-4)
    assert row["P_tot"] == pytest.approx(-8 * gamma * v, rel=1e-4)


# --------------------------------------------------------------------------- evolution


def test_free_wave_energy_over_thousand_steps():
    cfg = LatticeConfig(model="SG", L=40.0, n=1024, defect=False, far_boundary="reflecting",
                        params={"m": 0.0}, initial_condition={"type": "gaussian", "amplitude": 1.0,
                                                              "width": 4.0, "x0": -5.0})
    cfg.t_end = 1000 * cfg.dt
    assert run(cfg).drift("E_tot") < 1e-10


def test_defect_transmission_short_run():
    cfg = sg(n=512, L=60.0, t_end=24.0, initial_condition={"type": "sg_kink", "v": 0.5, "x0": -6.0})
    r = run(cfg)
    assert r.drift("E_tot") < 1e-3
    assert r.drift("E_bulk") > 100 * r.drift("E_tot")


def test_time_reversal_without_defect():
    cfg = sg(n=1024, t_end=10.0, defect=False, initial_condition={"type": "sg_kink", "v": 0.5, "x0": -5.0})
    assert time_reversal_error(cfg) < 1e-4


def test_time_reversal_with_defect():
    cfg = sg(n=512, t_end=10.0, initial_condition={"type": "sg_kink", "v": 0.5, "x0": -20.0})
    assert time_reversal_error(cfg) < 1e-6


def test_time_reversal_is_sg_only():
    with pytest.raises(ConfigError):
        time_reversal_error(bt())


def test_convergence_slope_of_power_law():
    ns = [100, 200, 400]
    assert convergence_slope(ns, [n ** -4.0 for n in ns]) == pytest.approx(4.0)


def test_csv_layout(tmp_path):
    path = tmp_path / "q.csv"
    run(sg(n=128, t_end=0.5, params={"sigma": 2.0}), path)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert float(rows[1][CSV_COLUMNS.index("E_D")]) == 5.0
    assert all(len(r) == len(CSV_COLUMNS) for r in rows)
    for r in rows[1:]:
        assert all(v == f"{float(v):.17g}" for v in r)


def test_runs_are_deterministic(tmp_path):
    cfg = bt(n=128, t_end=2.0, initial_condition={"type": "bt_pulse", "amplitude": 0.3, "x0": -4.0})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(cfg, a)
    run(cfg, b)
    assert a.read_bytes() == b.read_bytes()
