import json

import pytest

from defect_charges.cli import main


def _config(tmp_path, **kw):
    data = {"model": "SG", "L": 40.0, "n": 128, "t_end": 1.0, **kw}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


def test_derive_writes_all_files(tmp_path, capsys):
    out = tmp_path / "sg"
    assert main(["derive", "sg", "--order", "2", "--out", str(out)]) == 0
    for name in ("gamma.json", "densities.json", "defect.json", "report.tex", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"gamma.json", "densities.json", "defect.json", "report.tex"}
    assert manifest["command"] == "derive"


def test_sg_report_has_cosine_defect_energy(tmp_path):
    main(["derive", "sg", "--order", "2", "--out", str(tmp_path)])
    tex = (tmp_path / "report.tex").read_text()
    section = tex.split("Defect charges, trigonometric form")[1]
    e_line = next(line for line in section.splitlines() if line.startswith("E_D"))
    assert e_line.count("\\cos") == 2 and "\\sigma" in e_line
    charges = json.loads((tmp_path / "defect.json").read_text())["charges"]
    assert set(charges) == {"E", "P"}


def test_bt_order_zero_gives_number_only(tmp_path):
    main(["derive", "bt", "--order", "0", "--out", str(tmp_path)])
    dens = json.loads((tmp_path / "densities.json").read_text())
    assert set(dens["charges"]) == {"N"}
    assert all(k.endswith("|0") for k in dens["densities"])
    defect = json.loads((tmp_path / "defect.json").read_text())
    assert "N" in defect["log_parts"]


def test_gt_report_has_eliminated_forms(tmp_path):
    main(["derive", "gt", "--order", "2", "--out", str(tmp_path)])
    tex = (tmp_path / "report.tex").read_text()
    assert "Defect charges without X" in tex
    gamma = json.loads((tmp_path / "gamma.json").read_text())
    assert gamma["aux_dx"]


def test_derive_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["derive", "gt", "--order", "2", "--out", str(a)])
    main(["derive", "gt", "--order", "2", "--out", str(b)])
    for name in ("gamma.json", "densities.json", "defect.json", "report.tex"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert {k: v["sha256"] for k, v in ma["outputs"].items()} == {k: v["sha256"] for k, v in mb["outputs"].items()}


def test_usage_errors_exit_two(tmp_path):
    assert main(["derive", "kdv"]) == 2
    assert main(["derive", "bt", "--order", "-1", "--out", str(tmp_path)]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


def test_check_single_model_passes(capsys):
    assert main(["check", "--model", "sg"]) == 0
    out = capsys.readouterr().out
    assert "SG" in out and "BT " not in out and "FAIL" not in out


def test_check_gt_with_few_oracle_samples(capsys):
    assert main(["check", "--model", "gt", "--oracle-samples", "2"]) == 0
    assert "grassmann_oracle" in capsys.readouterr().out


def test_injected_fault_fails(capsys):
    assert main(["check", "--model", "sg", "--inject-fault", "k-sign"]) == 1
    out = capsys.readouterr().out
    failing = [line for line in out.splitlines() if "FAIL" in line]
    assert any("defect_gauge" in line for line in failing)
    assert "residual" in out


def test_invalid_thread_setting(monkeypatch):
    monkeypatch.setenv("DEFECT_CHARGES_THREADS", "many")
    assert main(["check", "--model", "sg"]) == 2


def test_simulate_zero_field(tmp_path, capsys):
    out = tmp_path / "run"
    cfg = _config(tmp_path, params={"sigma": 2.0})
    assert main(["simulate", str(cfg), "--out", str(out), "--gnuplot"]) == 0
    lines = (out / "charges.csv").read_text().splitlines()
    assert lines[0].startswith("t,N_L,N_R")
    for col in range(1, 13):
        assert len({line.split(",")[col] for line in lines[1:]}) == 1
    assert "E_tot" in (out / "plot.gp").read_text()
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"charges.csv", "plot.gp"}
    assert manifest["config_sha256"]
    assert "relative drift" in capsys.readouterr().out


def test_simulate_is_byte_identical(tmp_path):
    cfg = _config(tmp_path, initial_condition={"type": "sg_kink", "v": 0.5, "x0": -5.0})
    main(["simulate", str(cfg), "--out", str(tmp_path / "a")])
    main(["simulate", str(cfg), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "charges.csv").read_bytes() == (tmp_path / "b" / "charges.csv").read_bytes()


@pytest.mark.parametrize("body", ["{not json", '{"model": "SG", "n": 10}', '{"model": "SG", "dt": 5}'])
def test_simulate_bad_config_exits_two(tmp_path, body):
    path = tmp_path / "bad.json"
    path.write_text(body)
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2


def test_simulate_missing_file_exits_two(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.json")]) == 2
