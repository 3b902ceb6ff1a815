"""Defect contributions ``D_j = -ln[K_jj + sum_k K_jk Gamma_kj]`` at ``x = 0``.

The argument ``A(lambda)`` is factored as ``L (1 + s)`` with ``L`` its leading
field-free monomial.  ``-ln L`` only contributes a lambda-independent phase
(kept separately, linear in the exponent atoms) plus constants, which are
dropped.  ``-ln(1 + s)`` is expanded as a power series; for the Grassmannian
model every field-dependent part of ``s`` is nilpotent, so the series closes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .models import ALPHA, GT_X, GT_XD, BT_X, BT_XD, ModelSpec, mat_map, tilde_map
from .riccati import (
    RiccatiError,
    _split,
    combine,
    conserved_flux,
    series_mul,
    solve_riccati,
)
from .symexpr import (
    ZERO,
    Atom,
    NotInvertible,
    Q,
    SymExpr,
    I as IU,
    expi,
    flip_lambda,
    param,
    rewrite_alpha,
    substitute,
)


class SingularDefect(NotInvertible):
    pass


@dataclass(frozen=True)
class DefectContribution:
    """Order-``order`` coefficient of ``D_j``.

    ``phase`` is the real angle ``theta`` of the leading factor: the full
    coefficient is ``value + i * theta``.  It is linear in exponent atoms and
    nonzero only at order 0.
    """

    model: str
    j: int
    branch: str
    order: int
    value: SymExpr
    phase: SymExpr = ZERO

    @property
    def full(self) -> SymExpr:
        return self.value + self.phase * IU


def _working_K(model: ModelSpec, branch: str):
    if branch == "inf":
        return model.K
    if branch == "zero":
        return mat_map(model.K, flip_lambda)
    raise ValueError(f"branch must be 'inf' or 'zero', got {branch!r}")


def _field_free(e: SymExpr) -> SymExpr:
    return SymExpr({k: c for k, c in e.terms.items() if not k[1]})


def _with_atoms(e: SymExpr) -> SymExpr:
    return SymExpr({k: c for k, c in e.terms.items() if k[1]})


def _argument_series(model: ModelSpec, j: int, branch: str, lowest: int, sol) -> dict:
    """``K_jj + sum_k K_jk Gamma_kj`` as ``{power: coeff}`` down to ``lowest``."""
    Ks = _split(_working_K(model, branch))
    jj = j - 1
    out = {p: v for p, v in Ks[jj][jj].items() if p >= lowest}
    for k in range(model.size):
        if k == jj:
            continue
        for pk, ck in Ks[jj][k].items():
            order = model.start_order
            while pk - order >= lowest:
                if order > sol.known[k + 1]:
                    raise RiccatiError(f"Gamma_{k + 1}{j}^({order}) needed but not computed")
                g = sol.gamma(k + 1, order)
                if g.terms:
                    p = pk - order
                    term = ck * g
                    out[p] = out[p] + term if p in out else term
                order += 1
    return {p: v for p, v in out.items() if v.terms}


def log_factorization(model: ModelSpec, j: int, branch: str, max_order: int):
    """Return ``(L, s)`` with ``A = L (1 + s)``; ``s`` is a series in non-positive powers."""
    sol = solve_riccati(model, j, branch, max(max_order, 2))
    Ks = _split(_working_K(model, branch))
    top_k = max(p for row in Ks for x in row for p in x) if any(x for row in Ks for x in row) else 0
    probe = top_k - model.start_order
    A = _argument_series(model, j, branch, probe, sol)
    while not A:
        probe -= 1
        A = _argument_series(model, j, branch, probe, sol)
    p_top = max(A)
    A = _argument_series(model, j, branch, p_top - max_order, sol)
    lead = _field_free(A[p_top])
    if len(lead.terms) != 1:
        raise SingularDefect(f"D_{j} ({branch}): leading coefficient {A[p_top]} has no invertible monomial part")
    L = SymExpr({(p_top,) + key[1:]: c for key, c in lead.terms.items()})
    Linv = L.inverse()
    lowest = -max_order
    s: dict = {}
    for p, v in A.items():
        q = p - p_top
        if q < lowest:
            continue
        w = v * SymExpr({(0,) + k[1:]: c for k, c in Linv.terms.items()})
        if q == 0:
            w = w - 1
        if w.terms:
            s[q] = w
    if 0 in s and _field_free(s[0]).terms:
        raise SingularDefect(f"D_{j} ({branch}): leading part is not a single monomial")
    return L, s


def _nilpotent_cube_check(s: dict) -> None:
    nil = {p: _with_atoms(v) for p, v in s.items()}
    nil = {p: v for p, v in nil.items() if v.terms}
    cube = series_mul(series_mul(nil, nil, -10**6), nil, -10**6)
    if cube:
        raise RiccatiError("nilpotent part of the log argument does not satisfy s^3 = 0")


def _neg_log1p(s: dict, lowest: int, limit: int = 64) -> dict:
    """Coefficients of ``-ln(1 + s)`` down to ``lowest``."""
    out: dict = {}
    power = {0: SymExpr.const(1)}
    for n in range(1, limit):
        power = series_mul(power, s, lowest)
        if not power:
            return out
        c = Fraction((-1) ** n, n)
        for p, v in power.items():
            out[p] = out[p] + v * c if p in out else v * c
    raise RiccatiError("logarithm series did not close within the term limit")


def _phase_of(L: SymExpr) -> SymExpr:
    """``-ln L`` up to constants is ``i * phase``; the phase is linear in exponent atoms."""
    ((_, _, exps, _), _), = L.terms.items()
    acc = ZERO
    for a, v in exps:
        acc = acc + SymExpr.atom(a) * (-v)
    return acc


def defect_expand(model: ModelSpec, j: int, branch: str = "inf", max_order: int = 2) -> list[DefectContribution]:
    L, s = log_factorization(model, j, branch, max_order)
    if model.odd_index is not None:
        _nilpotent_cube_check(s)
    series = _neg_log1p(s, -max_order)
    phase = _phase_of(L)
    out = []
    for k in range(0, max_order + 1):
        v = series.get(-k, ZERO)
        v = SymExpr({key: c for key, c in v.terms.items() if key[1] or key[2]})
        if v.parity() == 1:
            raise RiccatiError(f"D_{j}^({k}) is odd")
        out.append(DefectContribution(model.name, j, branch, k, v, phase if k == 0 else ZERO))
    return out


def all_contributions(model: ModelSpec, max_order: int = 2) -> dict:
    """``{(j, branch, k): DefectContribution}`` for every column and both branches."""
    out = {}
    for branch in ("inf", "zero"):
        for j in range(1, model.size + 1):
            for c in defect_expand(model, j, branch, max_order):
                out[(j, branch, c.order)] = c
    return out


@dataclass(frozen=True)
class DefectCharge:
    """``value`` plus ``log_part``, the latter linear in exponent atoms (e.g. alpha)."""

    value: SymExpr
    log_part: SymExpr = ZERO

    @property
    def full(self) -> SymExpr:
        return self.value + self.log_part


def defect_charges(model: ModelSpec, contributions: dict | None = None) -> dict[str, DefectCharge]:
    """N_D, E_D, P_D from the same linear combinations used for the bulk charges."""
    if contributions is None:
        contributions = all_contributions(model, 2)
    values = {k: c.value for k, c in contributions.items()}
    logs = {k: c.phase * IU for k, c in contributions.items()}
    v = combine(model, values)
    p = combine(model, logs)
    return {name: DefectCharge(v[name], p[name]) for name in v}


def phase_to_exp(theta: SymExpr, scale=1) -> SymExpr:
    """``exp(i * scale * theta)`` for ``theta`` a real rational combination of atoms."""
    out = SymExpr.const(1)
    for (lam, atoms, exps, params), c in theta.terms.items():
        if lam or exps or params or len(atoms) != 1 or c.im:
            raise ValueError(f"not a real rational multiple of an atom: {theta}")
        out = out * expi(atoms[0], c.re * Fraction(scale))
    return out


def bt_number_alpha_check(model: ModelSpec, charges: dict | None = None) -> SymExpr:
    """``sin(g N_D / 2) - (g a / 2m) X+ X`` after alpha rewriting; zero iff ``4 alpha = g N_D``."""
    if charges is None:
        charges = defect_charges(model)
    nd = charges["N"]
    if nd.value.terms:
        raise ValueError("BT N_D is expected to be a pure phase")
    half = _strip_params(nd.log_part * param("g") * Fraction(1, 2))
    e_plus = phase_to_exp(half)
    e_minus = phase_to_exp(half, -1)
    sine = (e_plus - e_minus) * SymExpr.const(Q(0, -1)) * Fraction(1, 2)
    target = param("g") * param("a") / param("m") * Fraction(1, 2) * SymExpr.atom(BT_XD) * SymExpr.atom(BT_X)
    return rewrite_alpha(sine - target, model)


def _strip_params(e: SymExpr) -> SymExpr:
    for key in e.terms:
        if key[3]:
            raise ValueError(f"phase carries leftover parameters: {e}")
    return e


def defect_sum_rule_gt(contributions: dict) -> list[SymExpr]:
    """``D_3 - D_1 - D_2`` at orders 0 and 2, both branches; all must vanish."""
    out = []
    for b in ("inf", "zero"):
        for k in (0, 2):
            d = contributions[(3, b, k)]
            d1 = contributions[(1, b, k)]
            d2 = contributions[(2, b, k)]
            out.append(d.value - d1.value - d2.value)
            out.append(d.phase - d1.phase - d2.phase)
    return out


def formal_conjugate(model: ModelSpec, e: SymExpr) -> SymExpr:
    """Dagger swap with ``i -> -i``; the sine-Gordon field is real, so it keeps no dagger."""
    c = e.conj_map()
    if model.name != "SG":
        return c
    return substitute(c, lambda a: SymExpr.atom(a._replace(dagger=False)) if a.dagger else None)


# --------------------------------------------------------------------------- modified conservation


def conservation_with_defect(model: ModelSpec, j: int, branch: str, order: int) -> SymExpr:
    """``d_t D_j^(k) - (flux - flux~)`` reduced modulo the defect conditions."""
    sol = solve_riccati(model, j, branch, max(order, 2))
    contrib = {c.order: c for c in defect_expand(model, j, branch, order)}[order]
    ext = sol.extended_model()
    d = contrib.full
    flux = conserved_flux(sol, order)
    if any(a.kind == "aux" for a in flux.atoms()):
        raise RiccatiError("flux at this order involves nonlocal auxiliary symbols")
    jump = flux - tilde_map(flux)
    residual = ext.dt(d) - jump
    residual = ext.subst_eom(residual)
    return model.reduce(residual)


# --------------------------------------------------------------------------- eliminating X


def _partner_type(atoms, names: tuple[str, str]) -> int | None:
    kinds = {1 if a.name == names[0] else 2 for a in atoms if a.kind == "field" and a.name in names}
    if not kinds:
        return None
    if len(kinds) > 1:
        return 1
    return kinds.pop()


def _bt_forms():
    w = lambda c: expi(ALPHA, c)  # noqa: E731
    f = lambda n, d=False, t=False: SymExpr.atom(Atom(n, dagger=d, tilde=t))  # noqa: E731
    ia = SymExpr.const(Q(0, 1)) * param("a", -1)
    return {
        (BT_X, 1): f("phi1", t=True) * w(1) + f("phi1") * w(-1),
        (BT_X, 2): ia * (f("phi2") * w(1) - f("phi2", t=True) * w(-1)),
        (BT_XD, 1): f("phi1", True, True) * w(-1) + f("phi1", True) * w(1),
        (BT_XD, 2): -ia * (f("phi2", True) * w(-1) - f("phi2", True, True) * w(1)),
    }


def _gt_forms():
    f = lambda n, d=False, t=False: SymExpr.atom(Atom(n, dagger=d, tilde=t, odd=True))  # noqa: E731
    x, xd = SymExpr.atom(GT_X), SymExpr.atom(GT_XD)
    c = SymExpr.const(Q(0, Fraction(1, 2))) * param("a") * param("g") / param("m")
    g2m = param("g") / param("m") * Fraction(1, 2)
    ia = SymExpr.const(Q(0, 1)) * param("a", -1)
    return {
        (GT_X, 1): f("psi1", t=True) + f("psi1") + c * f("psi1", t=True) * xd * x,
        (GT_X, 2): ia * (f("psi2") - f("psi2", t=True)) - g2m * xd * x * f("psi2"),
        (GT_XD, 1): f("psi1", True, True) + f("psi1", True) - c * f("psi1", True, True) * xd * x,
        (GT_XD, 2): -ia * (f("psi2", True) - f("psi2", True, True)) - g2m * xd * x * f("psi2", True),
    }


def eliminate_boundary(model: ModelSpec, charge: SymExpr, budget: int = 64) -> SymExpr:
    """Replace X, X+ by bulk and tilde fields, choosing per monomial the Backlund form
    that matches the bulk partner already present (phi1/psi1 versus phi2/psi2)."""
    if model.name == "SG":
        return charge
    forms = _bt_forms() if model.name == "BT" else _gt_forms()
    names = ("phi1", "phi2") if model.name == "BT" else ("psi1", "psi2")
    boundary = {BT_X, BT_XD} if model.name == "BT" else {GT_X, GT_XD}
    e = charge
    for _ in range(budget):
        pending = [(k, c) for k, c in e.terms.items() if any(a in boundary for a in k[1])]
        if not pending:
            return e
        out = SymExpr({k: c for k, c in e.terms.items() if not any(a in boundary for a in k[1])})
        stuck = True
        for key, c in pending:
            kind = _partner_type(key[1], names)
            mono = SymExpr({key: c})
            if kind is None:
                out = out + mono
                continue
            stuck = False
            out = out + substitute(mono, lambda a, t=kind: forms.get((a, t)))
        e = out
        if stuck:
            return e
    raise RuntimeError(f"boundary elimination did not settle within {budget} passes; partial form: {e}")


def zero_boundary(e: SymExpr) -> SymExpr:
    """Set every field and boundary atom to zero and every exponent atom to zero."""
    out = ZERO
    for (lam, atoms, exps, params), c in e.terms.items():
        if atoms:
            continue
        out = out + SymExpr({(lam, (), (), params): c})
    return out


__all__ = [
    "DefectCharge",
    "DefectContribution",
    "SingularDefect",
    "all_contributions",
    "bt_number_alpha_check",
    "conservation_with_defect",
    "defect_charges",
    "defect_expand",
    "defect_sum_rule_gt",
    "eliminate_boundary",
    "formal_conjugate",
    "log_factorization",
    "phase_to_exp",
    "zero_boundary",
]
