"""Command-line front end: ``derive``, ``check`` and ``simulate``.

Exit codes: 0 success, 1 verification or run failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# lowest Laurent order each charge needs
CHARGE_ORDERS = {
    "BT": {"N": 0, "E": 2, "P": 2},
    "GT": {"N": 0, "E": 2, "P": 2},
    "SG": {"E": 1, "P": 1},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def sha256_of(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out: Path, command: str, argv: list[str], started: str, outputs: list[Path],
                   params: dict, config_digest: str | None = None) -> Path:
    """Manifest listing every output with its digest; written last."""
    from .golden import dump_json

    manifest = {
        "command": command,
        "argv": argv,
        "tool_version": __version__,
        "params": params,
        "config_sha256": config_digest,
        "started": started,
        "finished": _now(),
        "outputs": {p.name: {"path": str(p), "sha256": sha256_of(p)} for p in outputs},
    }
    path = out / "manifest.json"
    dump_json(manifest, path)
    return path


# --------------------------------------------------------------------------- derive


def _latex_section(title: str, rows: list[tuple[str, str]]) -> list[str]:
    lines = [rf"\section*{{{title}}}", r"\begin{align*}"]
    lines += [rf"{lhs} &= {rhs} \\" for lhs, rhs in rows]
    lines.append(r"\end{align*}")
    return lines


def _hat(branch: str, body: str) -> str:
    return rf"\hat{{{body}}}" if branch == "zero" else body


def derive(model_name: str, order: int, out: Path) -> list[Path]:
    from .defects import all_contributions, defect_charges, eliminate_boundary
    from .golden import dump_json, table_to_json
    from .models import build_model
    from .riccati import densities, solve_riccati

    model = build_model(model_name)
    name = model.name
    wanted = {q for q, k in CHARGE_ORDERS[name].items() if k <= order}

    gam, aux = {}, {}
    for branch in ("inf", "zero"):
        for j in range(1, model.size + 1):
            sol = solve_riccati(model, j, branch, max(order, 1))
            for (i, k), v in sorted(sol.coeffs.items()):
                if k <= order:
                    gam[(branch, i, j, k)] = v
            for atom, rule in sorted(sol.aux_rules()[0].items()):
                if int(atom.name.rsplit("_", 1)[1]) <= order:
                    aux[atom.name] = rule
    dens = densities(model, tuple(range(order + 1)))
    contrib = all_contributions(model, order)
    bulk = _partial_combine(model, dens, wanted) if wanted else {}
    dcharges = _partial_defect(model, contrib, wanted) if wanted else {}
    eliminated = {}
    if name != "SG":
        eliminated = {k: eliminate_boundary(model, c.value) for k, c in dcharges.items() if k != "N"}

    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "gamma.json", out / "densities.json", out / "defect.json", out / "report.tex"]
    dump_json({"model": name, "order": order, "gamma": table_to_json(gam), "aux_dx": table_to_json(aux)}, paths[0])
    dump_json({"model": name, "order": order, "densities": table_to_json(dens), "charges": table_to_json(bulk)},
              paths[1])
    dump_json(
        {
            "model": name,
            "order": order,
            "contributions": table_to_json({k: c.value for k, c in contrib.items()}),
            "phases": table_to_json({k: c.phase for k, c in contrib.items() if c.phase.terms}),
            "charges": table_to_json({k: c.value for k, c in dcharges.items()}),
            "log_parts": table_to_json({k: c.log_part for k, c in dcharges.items() if c.log_part.terms}),
            "eliminated": table_to_json(eliminated),
        },
        paths[2],
    )
    paths[3].write_text(_report_tex(model, order, gam, aux, dens, bulk, contrib, dcharges, eliminated))
    return paths


def _partial_combine(model, dens, wanted):
    """Charges in ``wanted`` only; orders not derived enter as zero and are never read."""
    from .riccati import combine
    from .symexpr import ZERO

    filled = dict(dens)
    for j in range(1, model.size + 1):
        for b in ("inf", "zero"):
            for k in set(CHARGE_ORDERS[model.name].values()):
                filled.setdefault((j, b, k), ZERO)
    return {k: v for k, v in combine(model, filled).items() if k in wanted}


def _partial_defect(model, contrib, wanted):
    from .defects import DefectContribution, defect_charges
    from .symexpr import ZERO

    filled = dict(contrib)
    for j in range(1, model.size + 1):
        for b in ("inf", "zero"):
            for k in set(CHARGE_ORDERS[model.name].values()):
                filled.setdefault((j, b, k), DefectContribution(model.name, j, b, k, ZERO))
    return {k: v for k, v in defect_charges(model, filled).items() if k in wanted}


def _report_tex(model, order, gam, aux, dens, bulk, contrib, dcharges, eliminated) -> str:
    from .symexpr import trig_latex

    lines = [
        r"\documentclass{article}",
        r"\usepackage{amsmath}",
        r"\begin{document}",
        rf"\title{{{model.name} conserved and defect charges through order {order}}}",
        r"\maketitle",
    ]
    lines += _latex_section(
        "Riccati coefficients",
        [(_hat(b, rf"\Gamma_{{{i}{j}}}^{{({k})}}"), v.latex()) for (b, i, j, k), v in gam.items()],
    )
    if aux:
        lines += _latex_section("Auxiliary symbols", [(rf"\partial_x {n}", v.latex()) for n, v in aux.items()])
    lines += _latex_section(
        "Densities", [(_hat(b, rf"I_{{{j}}}^{{({k})}}"), v.latex()) for (j, b, k), v in sorted(dens.items())]
    )
    if bulk:
        lines += _latex_section("Bulk charges (densities)", [(k, v.latex()) for k, v in bulk.items()])
    lines += _latex_section(
        "Defect contributions",
        [(_hat(b, rf"D_{{{j}}}^{{({k})}}"), c.full.latex()) for (j, b, k), c in sorted(contrib.items())],
    )
    if dcharges:
        lines += _latex_section("Defect charges", [(f"{k}_D", c.full.latex()) for k, c in dcharges.items()])
        lines += _latex_section(
            "Defect charges, trigonometric form", [(f"{k}_D", trig_latex(c.full)) for k, c in dcharges.items()]
        )
    if eliminated:
        lines += _latex_section(
            "Defect charges without X", [(f"{k}_D", trig_latex(v)) for k, v in eliminated.items()]
        )
    lines.append(r"\end{document}")
    return "\n".join(lines) + "\n"


def cmd_derive(args, argv) -> int:
    if args.order < 0:
        raise UsageError("--order must be non-negative")
    started = _now()
    out = Path(args.out)
    paths = derive(args.model, args.order, out)
    from .models import build_model

    write_manifest(out, "derive", argv, started, paths, build_model(args.model).params)
    for p in paths:
        print(p)
    return EXIT_OK


# --------------------------------------------------------------------------- check


def cmd_check(args, argv) -> int:
    from .models import MODEL_NAMES
    from .verify import run_checks

    models = MODEL_NAMES if args.model == "all" else (args.model.upper(),)
    suite = run_checks(models, fault=args.inject_fault, oracle_samples=args.oracle_samples)
    print(suite.table())
    for r in suite.failures():
        print(f"\n--- {r.model} {r.name} residual:\n{r.detail}")
    n_fail = len(suite.failures())
    print(f"\n{len(suite.results) - n_fail} passed, {n_fail} failed")
    return EXIT_OK if suite.ok else EXIT_FAIL


# --------------------------------------------------------------------------- simulate


GNUPLOT_TEMPLATE = """\
set datafile separator ','
set key autotitle columnhead
set xlabel 't'
set terminal pngcairo size 900,600
set output '{stem}_energy.png'
plot '{csv}' using 1:12 with lines title 'E_tot', \\
     '' using 1:($4+$5) with lines title 'E_bulk', \\
     '' using 1:9 with lines title 'E_D'
set output '{stem}_momentum.png'
plot '{csv}' using 1:13 with lines title 'P_tot', \\
     '' using 1:($6+$7) with lines title 'P_bulk', \\
     '' using 1:10 with lines title 'P_D'
"""


def cmd_simulate(args, argv) -> int:
    from .numsim import BlowUp, ConfigError, LatticeConfig, run

    started = _now()
    try:
        cfg = LatticeConfig.from_json(args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "charges.csv"
    try:
        report = run(cfg, csv_path)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BlowUp as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    outputs = [csv_path]
    if args.gnuplot:
        gp = out / "plot.gp"
        gp.write_text(GNUPLOT_TEMPLATE.format(csv=csv_path.name, stem="charges"))
        outputs.append(gp)
    digest = hashlib.sha256(json.dumps(cfg.to_dict(), sort_keys=True).encode()).hexdigest()
    write_manifest(out, "simulate", argv, started, outputs, cfg.params, digest)
    print("relative drift")
    for k, v in report.summary().items():
        print(f"  {k:7s} {v:.3e}")
    if report.flags.get("arcsin_clamped"):
        print(f"  alpha clamped {report.flags['arcsin_clamped']} times")
    return EXIT_OK


# --------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="defect-charges", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("derive", help="derive coefficients, densities and defect charges")
    d.add_argument("model", type=str.lower, choices=("bt", "gt", "sg"))
    d.add_argument("--order", type=int, default=2)
    d.add_argument("--out", default="derived")
    d.set_defaults(fn=cmd_derive)

    c = sub.add_parser("check", help="run the symbolic and Grassmann verification matrix")
    c.add_argument("--model", type=str.lower, choices=("all", "bt", "gt", "sg"), default="all")
    c.add_argument("--inject-fault", choices=("k-sign",), default=None)
    c.add_argument("--oracle-samples", type=int, default=100)
    c.set_defaults(fn=cmd_check)

    s = sub.add_parser("simulate", help="run a lattice simulation from a JSON config")
    s.add_argument("config")
    s.add_argument("--out", default="run")
    s.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    s.set_defaults(fn=cmd_simulate)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args, argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # includes invalid DEFECT_CHARGES_THREADS and model parameter errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
