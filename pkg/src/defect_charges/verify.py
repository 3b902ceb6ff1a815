"""The verification matrix run by ``defect-charges check``.

Each check returns a :class:`CheckResult`; exceptions raised while computing a
check are caught and turned into failures so a broken model (for instance one
with an injected fault) still yields a complete table.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from . import reference as R
from .defects import (
    all_contributions,
    bt_number_alpha_check,
    conservation_with_defect,
    defect_charges,
    defect_sum_rule_gt,
    eliminate_boundary,
    formal_conjugate,
    zero_boundary,
)
from .golden import load_fixture, table_from_json
from .models import (
    MODEL_NAMES,
    ModelSpec,
    backlund_elimination_consistent,
    build_model,
    defect_gauge_residual,
    is_zero_matrix,
    residual_report,
    zero_curvature_residual,
)
from .riccati import (
    combine,
    conservation_residual,
    charge_orders,
    densities,
    equal_mod_total_derivative,
    gt_sum_rule_residuals,
    ibp_normal_form,
    is_total_derivative,
    riccati_residual,
    solve_riccati,
)
from .symexpr import SymExpr, param, rewrite_alpha

THREADS_ENV = "DEFECT_CHARGES_THREADS"
ORACLE_SAMPLES = 100


@dataclass
class CheckResult:
    model: str
    name: str
    criterion: int
    ok: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{self.model:3s} {self.name:28s} [{self.criterion}] {status} {self.seconds:7.2f}s"


@dataclass
class CheckSuite:
    results: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.ok]

    def table(self) -> str:
        return "\n".join(r.line() for r in self.results)


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


# --------------------------------------------------------------------------- helpers


def _nonzero(items: dict) -> str:
    bad = [f"{k}: {v}" for k, v in items.items() if v.terms]
    return "\n".join(bad)


def _compare(computed: dict, expected: dict, mod_dx: bool = False) -> str:
    lines = []
    for key, want in expected.items():
        got = computed.get(key)
        if got is None:
            lines.append(f"{key}: missing")
            continue
        if not mod_dx:
            if (got - want).terms:
                lines.append(f"{key}: got {got}; expected {want}")
            continue
        # two independent routes: Euler operator, then canonical integration-by-parts form
        if not equal_mod_total_derivative(got, want):
            lines.append(f"{key}: differs by more than a total derivative: {got - want}")
        elif ibp_normal_form(got) != ibp_normal_form(want):
            lines.append(f"{key}: canonical forms differ: {ibp_normal_form(got)} vs {ibp_normal_form(want)}")
    return "\n".join(lines)


def _gammas(model: ModelSpec, table: dict) -> dict:
    out = {}
    for (branch, i, j, k) in table:
        sol = solve_riccati(model, j, branch, max(k, 3))
        out[(branch, i, j, k)] = sol.gamma(i, k)
    return out


def _aux_dx(model: ModelSpec) -> dict[str, SymExpr]:
    out = {}
    for branch in ("inf", "zero"):
        for j in range(1, model.size + 1):
            dx, _ = solve_riccati(model, j, branch, 3).aux_rules()
            for atom, rule in dx.items():
                out[atom.name] = rule
    return out


# --------------------------------------------------------------------------- individual checks


def check_gamma_golden(model: ModelSpec) -> str:
    got = _gammas(model, R.GAMMA[model.name])
    detail = _compare(got, R.GAMMA[model.name])
    rejected = getattr(R, f"{model.name}_GAMMA_REJECTED", {})
    for key, wrong in rejected.items():
        if not (got[key] - wrong).terms:
            detail += f"\n{key}: matches a rejected variant"
    return detail.strip()


def check_gamma_derived(model: ModelSpec) -> str:
    data = load_fixture("models", "bt_gamma21_derived.json")
    table = table_from_json(data["gamma"])
    top = max(k[3] for k in table)
    sol = solve_riccati(model, 1, "inf", top)
    return _compare({k: sol.gamma(k[1], k[3]) for k in table}, table)


def check_aux_rules(model: ModelSpec) -> str:
    got = _aux_dx(model)
    return _compare(got, R.GT_AUX_DX)


def check_series_residual(model: ModelSpec, top: int = 4) -> str:
    """Riccati x- and t-equations hold at every power fixed by the computed coefficients."""
    bad = []
    for branch in ("inf", "zero"):
        for j in range(1, model.size + 1):
            sol = solve_riccati(model, j, branch, top)
            highest = max(k for (_, k) in sol.coeffs)
            for direction in ("x", "t"):
                for P in range(2 - highest, 3):
                    for i in range(1, model.size + 1):
                        if i != j and riccati_residual(sol, i, P, direction).terms:
                            bad.append(f"{branch} j={j} i={i} {direction} lambda^{P}")
    return "\n".join(bad)


def check_zero_curvature(model: ModelSpec) -> str:
    return "\n".join(residual_report(zero_curvature_residual(model)))


def check_defect_gauge(model: ModelSpec) -> str:
    Rt, Rx = defect_gauge_residual(model)
    if is_zero_matrix(Rt) and is_zero_matrix(Rx):
        return ""
    return "\n".join(["R_t:"] + residual_report(Rt) + ["R_x:"] + residual_report(Rx))


def check_backlund(model: ModelSpec) -> str:
    return "\n".join(str(r) for r in backlund_elimination_consistent(model) if r.terms)


def check_conservation(model: ModelSpec) -> str:
    bad = {}
    for branch in ("inf", "zero"):
        for j in range(1, model.size + 1):
            sol = solve_riccati(model, j, branch, 3)
            for k in range(0, 3):
                bad[(j, branch, k)] = conservation_residual(sol, k)
    return _nonzero(bad)


def check_densities(model: ModelSpec) -> str:
    return _compare(densities(model, charge_orders(model)), R.DENSITIES[model.name], mod_dx=True)


def check_charges(model: ModelSpec) -> str:
    got = combine(model, densities(model, charge_orders(model)))
    return _compare(got, R.CHARGES[model.name], mod_dx=True)


def check_defect_contributions(model: ModelSpec) -> str:
    contrib = all_contributions(model, 2)
    detail = _compare({k: c.value for k, c in contrib.items()}, R.DEFECT[model.name])
    rejected = getattr(R, f"{model.name}_DEFECT_REJECTED", {})
    for key, wrong in rejected.items():
        if not (contrib[key].value - wrong).terms:
            detail += f"\n{key}: matches a rejected variant"
    return detail.strip()


def check_defect_charges(model: ModelSpec) -> str:
    charges = defect_charges(model)
    detail = _compare({k: c.value for k, c in charges.items()}, R.DEFECT_CHARGES[model.name])
    if model.name == "BT":
        res = bt_number_alpha_check(model, charges)
        if res.terms:
            detail += f"\nsin(g N_D/2) - (ga/2m) X+X = {res}"
        if charges["N"].log_part.terms and _alpha_coeff(charges["N"].log_part) != R.BT_NUMBER_ALPHA_COEFF:
            detail += f"\nN_D = {charges['N'].log_part}, expected 4 alpha / g"
    if model.name == "SG":
        sigma = param("sigma")
        vac = zero_boundary(charges["E"].value) - 2 * param("m") * (sigma + sigma.inverse())
        if vac.terms:
            detail += f"\nE_D at zero boundary data: {vac}"
    if model.name == "GT":
        for k, c in charges.items():
            if zero_boundary(c.value).terms:
                detail += f"\n{k}_D at zero boundary data is nonzero"
    return detail.strip()


def _alpha_coeff(e: SymExpr) -> SymExpr:
    from .models import ALPHA

    out = SymExpr()
    for (lam, atoms, exps, params), c in e.terms.items():
        if atoms == (ALPHA,):
            out = out + SymExpr({(lam, (), exps, params): c})
    return out


def check_eliminated(model: ModelSpec) -> str:
    charges = defect_charges(model)
    bad = {}
    for name, want in R.DEFECT_ELIMINATED[model.name].items():
        got = eliminate_boundary(model, charges[name].value)
        if any(a.kind == "boundary" for a in got.atoms()):
            bad[name] = got
            continue
        bad[name] = rewrite_alpha(got - want, model)
    return _nonzero(bad)


# formal conjugation maps D_1 to sign * D_2; odd reordering flips the GT order-2 sign
BRANCH_SIGNS = {("GT", 2): -1}


def check_branch_symmetry(model: ModelSpec) -> str:
    contrib = all_contributions(model, 2)
    bad = {}
    for b in ("inf", "zero"):
        for k in range(3):
            sign = BRANCH_SIGNS.get((model.name, k), 1)
            bad[(b, k)] = formal_conjugate(model, contrib[(1, b, k)].value) - contrib[(2, b, k)].value * sign
    return _nonzero(bad)


def check_sum_rules(model: ModelSpec) -> str:
    lines = [f"bulk: {r}" for r in gt_sum_rule_residuals(model) if not is_total_derivative(r)]
    lines += [f"defect: {r}" for r in defect_sum_rule_gt(all_contributions(model, 2)) if r.terms]
    return "\n".join(lines)


DEFECT_CONSERVATION = {
    "SG": [(j, b, 1) for j in (1, 2) for b in ("inf", "zero")],
    "BT": [(j, b, 2) for j in (1, 2) for b in ("inf", "zero")],
    "GT": [(j, b, k) for j in (1, 2, 3) for b in ("inf", "zero") for k in (0, 2)],
}


def check_defect_conservation(model: ModelSpec) -> str:
    bad = {}
    for j, b, k in DEFECT_CONSERVATION[model.name]:
        bad[(j, b, k)] = conservation_with_defect(model, j, b, k)
    return _nonzero(bad)


def check_grassmann_oracle(model: ModelSpec, samples: int = ORACLE_SAMPLES, tol: float = 1e-10) -> str:
    from .oracle import run_oracle

    report = run_oracle(
        model,
        samples=samples,
        printed=R.GT_CHARGES,
        closed_forms=R.GT_DEFECT_CHARGES,
        gammas=R.GT_GAMMA,
        densities=R.GT_DENSITIES,
    )
    if report.ok(tol):
        return ""
    return "\n".join(f"{k}: {v:.3e}" for k, v in sorted(report.worst.items()) if v >= tol)


# (name, criterion, function, models it applies to)
CHECKS: list[tuple[str, int, Callable[[ModelSpec], str], tuple[str, ...]]] = [
    ("gamma_golden", 1, check_gamma_golden, MODEL_NAMES),
    ("gamma_derived", 1, check_gamma_derived, ("BT",)),
    ("aux_dx_rules", 1, check_aux_rules, ("GT",)),
    ("series_residual", 1, check_series_residual, MODEL_NAMES),
    ("zero_curvature", 2, check_zero_curvature, MODEL_NAMES),
    ("defect_gauge", 2, check_defect_gauge, MODEL_NAMES),
    ("backlund_consistency", 2, check_backlund, MODEL_NAMES),
    ("conservation", 3, check_conservation, MODEL_NAMES),
    ("densities", 3, check_densities, MODEL_NAMES),
    ("charges", 3, check_charges, MODEL_NAMES),
    ("defect_contributions", 4, check_defect_contributions, MODEL_NAMES),
    ("defect_charges", 4, check_defect_charges, MODEL_NAMES),
    ("branch_symmetry", 4, check_branch_symmetry, MODEL_NAMES),
    ("defect_eliminated", 4, check_eliminated, ("BT", "GT")),
    ("sum_rules", 5, check_sum_rules, ("GT",)),
    ("grassmann_oracle", 6, check_grassmann_oracle, ("GT",)),
    ("defect_conservation", 7, check_defect_conservation, MODEL_NAMES),
]


def _run_one(name: str, criterion: int, fn, model: ModelSpec) -> CheckResult:
    start = time.perf_counter()
    try:
        detail = fn(model)
        ok = not detail
    except Exception as exc:  # a failing check must not hide the others
        detail = f"{type(exc).__name__}: {exc}"
        ok = False
    return CheckResult(model.name, name, criterion, ok, detail, time.perf_counter() - start)


def run_model(name: str, fault: str | None = None, skip: tuple[str, ...] = (),
              oracle_samples: int = ORACLE_SAMPLES) -> list[CheckResult]:
    model = build_model(name, fault=fault)
    out = []
    for check, criterion, fn, applies in CHECKS:
        if model.name not in applies or check in skip:
            continue
        if fn is check_grassmann_oracle:
            fn = lambda m, s=oracle_samples: check_grassmann_oracle(m, s)  # noqa: E731
        out.append(_run_one(check, criterion, fn, model))
    return out


def run_checks(models=MODEL_NAMES, fault: str | None = None, skip: tuple[str, ...] = (),
               oracle_samples: int = ORACLE_SAMPLES, workers: int | None = None) -> CheckSuite:
    """Run the matrix; models run in separate processes when ``workers > 1``."""
    workers = max_workers() if workers is None else workers
    names = [m.upper() for m in models]
    suite = CheckSuite()
    if workers > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(names))) as pool:
            futures = [pool.submit(run_model, n, fault, skip, oracle_samples) for n in names]
            for f in futures:
                suite.results.extend(f.result())
    else:
        for n in names:
            suite.results.extend(run_model(n, fault, skip, oracle_samples))
    return suite


__all__ = ["CHECKS", "CheckResult", "CheckSuite", "max_workers", "run_checks", "run_model"]
