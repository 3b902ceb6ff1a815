"""Numeric cross-checks of the Grassmannian identities on random graded points.

Every symbolic result for the GT model is re-evaluated here with the product
carried out in :mod:`graded` rather than in the symbolic normal form.  The
symbolic layer only supplies the pieces (matrix entries, single derivatives of
individual coefficients); all products, exponentials and logarithm series are
recomputed numerically.  Total-derivative identities are tested by integrating
over a period with smooth periodic coefficient functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .graded import DEFAULT_GENERATORS, GradedElement, _product_table, gr_exp, gr_mul, random_element
from .models import GT_X, GT_XD, ModelSpec, tilde_map
from .riccati import RiccatiSolution, solve_riccati
from .symexpr import Atom, SymExpr, UnresolvedSymbol, evaluate

ORACLE_PARAMS = {"m": 1.3, "g": 0.7, "a": 1.6}

Num = dict  # lambda power -> GradedElement


# --------------------------------------------------------------------------- numeric Laurent series


def num_add(a: Num, b: Num, sign: float = 1.0) -> Num:
    out = dict(a)
    for p, v in b.items():
        out[p] = out[p] + v * sign if p in out else v * sign
    return out


def num_mul(a: Num, b: Num) -> Num:
    out: Num = {}
    for p, x in a.items():
        for q, y in b.items():
            v = gr_mul(x, y)
            out[p + q] = out[p + q] + v if p + q in out else v
    return out


def num_max(a: Num, powers=None) -> float:
    keys = a.keys() if powers is None else [p for p in powers if p in a]
    return max((a[p].max_abs() for p in keys), default=0.0)


# --------------------------------------------------------------------------- assignments


@dataclass
class GradedPoint:
    """Random graded values for every atom met, filled on demand.

    Tilde fields are never drawn: they are computed from the oriented
    elimination rules so that the defect conditions hold exactly.
    """

    model: ModelSpec
    rng: np.random.Generator
    n: int = DEFAULT_GENERATORS
    params: dict = field(default_factory=lambda: dict(ORACLE_PARAMS))
    values: dict = field(default_factory=dict)

    def one(self) -> GradedElement:
        return GradedElement.scalar(1.0, self.n)

    def _draw(self, a: Atom) -> GradedElement:
        return random_element(self.rng, self.n, parity=int(a.odd), body=False, scale=0.5)

    def _tilde(self, a: Atom) -> GradedElement:
        if a.dx or a.dt:
            raise UnresolvedSymbol(f"oracle points carry no jets of tilde fields: {a.text()}")
        rule = self.model.backlund.elimination[a]
        return self.ev0(rule)

    def ensure(self, e: SymExpr) -> None:
        for a in sorted(e.atoms()):
            if a in self.values:
                continue
            if a.tilde and a.kind == "field":
                continue
            self.values[a] = self._draw(a)
        for a in sorted(e.atoms()):
            if a.tilde and a.kind == "field" and a not in self.values:
                self.values[a] = self._tilde(a)

    def ev(self, e: SymExpr) -> Num:
        self.ensure(e)
        return evaluate(e, self.values, self.params, one=self.one())

    def ev0(self, e: SymExpr) -> GradedElement:
        out = self.ev(e)
        if set(out) - {0}:
            raise ValueError("expression still depends on lambda")
        return out.get(0, GradedElement(self.n))

    def ev_matrix(self, M) -> list[list[Num]]:
        return [[self.ev(x) for x in row] for row in M]


def nmat_mul(A, B):
    n = len(A)
    return [[_sum([num_mul(A[i][k], B[k][j]) for k in range(n)]) for j in range(n)] for i in range(n)]


def _sum(items):
    out: Num = {}
    for it in items:
        out = num_add(out, it)
    return out


def nmat_max(A) -> float:
    return max(num_max(x) for row in A for x in row)


# --------------------------------------------------------------------------- checks on one point


_DERIV_CACHE: dict = {}


def _model_d(model: ModelSpec, direction: str, e: SymExpr) -> SymExpr:
    """Memoized symbolic derivative; the same expressions recur for every sample."""
    key = (model.name, model.fault, id(model.aux_dx), direction, e)
    if key not in _DERIV_CACHE:
        _DERIV_CACHE[key] = (model.dt if direction == "t" else model.dx)(e)
    return _DERIV_CACHE[key]


def _sol_d(sol: RiccatiSolution, direction: str, e: SymExpr) -> SymExpr:
    cache = sol.__dict__.setdefault("_dcache", {})
    if "ext" not in cache:
        cache["ext"] = sol.extended_model()
    key = (direction, e)
    if key not in cache:
        ext = cache["ext"]
        cache[key] = (ext.dt if direction == "t" else ext.dx)(e)
    return cache[key]


def zero_curvature_error(point: GradedPoint) -> float:
    m = point.model
    U, V = point.ev_matrix(m.U), point.ev_matrix(m.V)
    dU = point.ev_matrix([[_model_d(m, "t", x) for x in row] for row in m.U])
    dV = point.ev_matrix([[_model_d(m, "x", x) for x in row] for row in m.V])
    UV, VU = nmat_mul(U, V), nmat_mul(V, U)
    n = m.size
    R = [[num_add(num_add(num_add(dU[i][j], dV[i][j], -1), UV[i][j]), VU[i][j], -1) for j in range(n)] for i in range(n)]
    return nmat_max(R)


def gt_K_numeric(point: GradedPoint) -> list[list[Num]]:
    """The GT defect matrix built with ``gr_exp`` from the numeric X, X+."""
    p = point.params
    m, g, a = p["m"], p["g"], p["a"]
    for atom in (GT_X, GT_XD):
        point.values.setdefault(atom, point._draw(atom))
    X, Xd = point.values[GT_X], point.values[GT_XD]
    XX = gr_mul(Xd, X)
    c = 1j * g * a / (2 * m)
    ep, em = gr_exp(XX * c), gr_exp(XX * (-c))
    r = np.sqrt(2 * g / m)
    z = GradedElement(point.n)
    k_minus = {1: em, -1: ep * (-1j / a)}
    k_plus = {1: ep, -1: em * (-1j / a)}
    return [
        [k_minus, {0: z}, {0: X * r}],
        [{0: z}, k_plus, {0: Xd * (-r)}],
        [{0: Xd * r}, {0: X * (-r)}, {1: point.one() * -1, -1: point.one() * (-1j / a)}],
    ]


def gauge_error(point: GradedPoint) -> float:
    """``dK/dx - U~K + KU`` and the t-counterpart with K from ``gr_exp``."""
    m = point.model
    K = gt_K_numeric(point)
    worst = 0.0
    for M, d in ((m.U, "x"), (m.V, "t")):
        dK = point.ev_matrix([[_model_d(m, d, x) for x in row] for row in m.K])
        Mt = point.ev_matrix([[tilde_map(x) for x in row] for row in M])
        Mn = point.ev_matrix(M)
        left, right = nmat_mul(Mt, K), nmat_mul(K, Mn)
        n = m.size
        R = [[num_add(num_add(dK[i][j], left[i][j], -1), right[i][j]) for j in range(n)] for i in range(n)]
        worst = max(worst, nmat_max(R))
    return worst


def backlund_error(point: GradedPoint) -> float:
    return max(point.ev0(rel).max_abs() for rel in point.model.backlund.algebraic)


def _gamma_series(point: GradedPoint, sol: RiccatiSolution, i: int) -> Num:
    return {-k: point.ev0(sol.gamma(i, k)) for k in range(sol.model.start_order, sol.known[i] + 1)}


def riccati_error(point: GradedPoint, sol: RiccatiSolution) -> float:
    """Riccati equation in x with products done numerically, at every complete order."""
    model = sol.model
    n, j = model.size, sol.j
    Uw = point.ev_matrix(sol.working_U())
    G = {i: _gamma_series(point, sol, i) for i in range(1, n + 1) if i != j}
    known = min(sol.known[i] for i in G)
    top = max(p for row in Uw for x in row for p in x)
    worst = 0.0
    for i in G:
        rhs = dict(Uw[i - 1][j - 1])
        for k in G:
            rhs = num_add(rhs, num_mul(Uw[i - 1][k - 1], G[k]))
        inner = dict(Uw[j - 1][j - 1])
        for k in G:
            inner = num_add(inner, num_mul(Uw[j - 1][k - 1], G[k]))
        rhs = num_add(rhs, num_mul(G[i], inner), -1)
        for order in range(model.start_order, sol.known[i] + 1):
            P = -order
            if top - P > known:
                continue
            lhs = point.ev0(_sol_d(sol, "x", sol.gamma(i, order)))
            diff = lhs - rhs.get(P, GradedElement(point.n))
            worst = max(worst, diff.max_abs())
    return worst


def conservation_error(point: GradedPoint, sol: RiccatiSolution, k: int) -> float:
    """``d_t rho - d_x flux`` with the product rule applied numerically."""
    model, j = sol.model, sol.j
    P = -k
    total = GradedElement(point.n)
    for M, direction, sign in ((sol.working_U(), "t", 1.0), (sol.working_V(), "x", -1.0)):
        def d(e, direction=direction):
            return _sol_d(sol, direction, e)

        row = M[j - 1]
        acc = _coef(point.ev(d(row[j - 1])), P, point.n)
        for i in range(1, model.size + 1):
            if i == j:
                continue
            entry = point.ev(row[i - 1])
            dentry = point.ev(d(row[i - 1]))
            for order in range(model.start_order, sol.known[i] + 1):
                if P + order not in entry and P + order not in dentry:
                    continue
                g = point.ev0(sol.gamma(i, order))
                dg = point.ev0(d(sol.gamma(i, order)))
                acc = acc + gr_mul(_coef(dentry, P + order, point.n), g)
                acc = acc + gr_mul(_coef(entry, P + order, point.n), dg)
        total = total + acc * sign
    return total.max_abs()


def _coef(s: Num, p: int, n: int) -> GradedElement:
    return s.get(p, GradedElement(n))


# --------------------------------------------------------------------------- defect log series numerically


def numeric_defect(point: GradedPoint, sol: RiccatiSolution, max_order: int) -> list[GradedElement]:
    """``-ln[K_jj + sum K_jk Gamma_kj]`` with K from ``gr_exp`` and a numeric log series.

    Returns the soul (body removed) of the order-0..max_order coefficients.
    """
    model, j = sol.model, sol.j
    K = gt_K_numeric(point)
    if sol.branch == "zero":
        K = [[{-p: v for p, v in x.items()} for x in row] for row in K]
    A = dict(K[j - 1][j - 1])
    for k in range(1, model.size + 1):
        if k != j:
            A = num_add(A, num_mul(K[j - 1][k - 1], _gamma_series(point, sol, k)))
    top = max(p for p, v in A.items() if v.max_abs() > 0)
    L = A[top].body
    lowest = -max_order
    s = {p - top: v / L for p, v in A.items() if p - top >= lowest}
    s[0] = s[0] - 1.0
    if abs(s[0].body) > 1e-12:
        raise ValueError("leading coefficient is not a scalar times one plus nilpotent")
    out: Num = {}
    power: Num = {0: point.one()}
    for nterm in range(1, point.n + max_order + 2):
        power = {p: v for p, v in num_mul(power, s).items() if p >= lowest}
        coef = (-1) ** nterm / nterm
        out = num_add(out, power, coef)
    res = []
    for k in range(max_order + 1):
        v = _coef(out, -k, point.n)
        c = v.coef.copy()
        c[0] = 0
        res.append(GradedElement(point.n, c))
    return res


# --------------------------------------------------------------------------- periodic profiles


def batched_mul(A: np.ndarray, B: np.ndarray, n: int) -> np.ndarray:
    """Graded product applied pointwise to stacks of coefficient vectors, shape (G, 2^n)."""
    left, right, sign, starts = _sorted_table(n)
    return np.add.reduceat(A[:, left] * B[:, right] * sign, starts, axis=1)


@lru_cache(maxsize=None)
def _sorted_table(n: int):
    """Product table ordered by output blade, with the start of each blade's run."""
    left, right, out, sign = _product_table(n)
    order = np.argsort(out, kind="stable")
    starts = np.searchsorted(out[order], np.arange(1 << n))
    return left[order], right[order], sign[order], starts


@dataclass
class PeriodicProfile:
    """Smooth periodic graded fields on a grid; jets are exact derivatives.

    Each coefficient of each field is a random trigonometric polynomial of
    degree ``modes``; the trapezoid rule on ``points`` nodes integrates every
    polynomial expression of bounded degree exactly (up to rounding).
    """

    rng: np.random.Generator
    n: int = DEFAULT_GENERATORS
    points: int = 32
    modes: int = 2
    params: dict = field(default_factory=lambda: dict(ORACLE_PARAMS))
    spectra: dict = field(default_factory=dict)

    def _spectrum(self, base: Atom):
        if base not in self.spectra:
            size = 1 << self.n
            grades = np.array([bin(k).count("1") for k in range(size)])
            mask = (grades % 2 == int(base.odd)) & (np.arange(size) != 0)
            ks = np.arange(-self.modes, self.modes + 1)
            c = (self.rng.normal(size=(len(ks), size)) + 1j * self.rng.normal(size=(len(ks), size))) * 0.3
            c[:, ~mask] = 0
            self.spectra[base] = (ks, c)
        return self.spectra[base]

    def field_values(self, a: Atom) -> np.ndarray:
        if a.dt or a.tilde or a.kind != "field":
            raise UnresolvedSymbol(f"periodic profiles only carry x-jets of bulk fields: {a.text()}")
        ks, c = self._spectrum(a._replace(dx=0))
        x = np.arange(self.points) * (2 * np.pi / self.points)
        phase = np.exp(1j * np.outer(x, ks))  # (G, modes)
        return (phase * (1j * ks) ** a.dx) @ c

    def evaluate(self, e: SymExpr) -> np.ndarray:
        size = 1 << self.n
        total = np.zeros((self.points, size), dtype=complex)
        cache: dict = {}
        products: dict = {(): None}
        for (lam, atoms, exps, pars), c in e.terms.items():
            if lam or exps:
                raise ValueError("periodic evaluation needs lambda-free polynomial densities")
            val = complex(c)
            for name, ex in pars:
                base = 2.0 if name == "2" else float(self.params[name])
                val *= base ** float(ex)
            mono = self._monomial(tuple(atoms), cache, products)
            if mono is None:
                total[:, 0] += val
            else:
                total += val * mono
        return total

    def _monomial(self, atoms: tuple, cache: dict, products: dict):
        # monomials share prefixes across terms, so products are memoised
        if atoms in products:
            return products[atoms]
        a = atoms[-1]
        if a not in cache:
            cache[a] = self.field_values(a)
        head = self._monomial(atoms[:-1], cache, products)
        out = cache[a] if head is None else batched_mul(head, cache[a], self.n)
        products[atoms] = out
        return out

    def integral(self, e: SymExpr) -> np.ndarray:
        return self.evaluate(e).mean(axis=0) * 2 * np.pi


# --------------------------------------------------------------------------- suite


@dataclass
class OracleReport:
    worst: dict = field(default_factory=dict)

    def record(self, name: str, value: float) -> None:
        self.worst[name] = max(self.worst.get(name, 0.0), float(value))

    @property
    def max_error(self) -> float:
        return max(self.worst.values(), default=0.0)

    def ok(self, tol: float = 1e-10) -> bool:
        return self.max_error < tol


def _solutions(model: ModelSpec, max_order: int = 3):
    return [solve_riccati(model, j, b, max_order) for b in ("inf", "zero") for j in (1, 2, 3)]


@dataclass
class SymbolicBundle:
    """Symbolic results shared by all samples of one oracle run."""

    solutions: list
    contributions: dict
    charges: dict
    eliminated: dict
    bulk: dict
    densities: dict

    @classmethod
    def build(cls, model: ModelSpec) -> SymbolicBundle:
        from .defects import all_contributions, defect_charges, eliminate_boundary
        from .riccati import bulk_charges, densities

        contributions = all_contributions(model, 2)
        charges = defect_charges(model, contributions)
        eliminated = {k: eliminate_boundary(model, charges[k].value) for k in ("E", "P")}
        return cls(
            _solutions(model), contributions, charges, eliminated,
            bulk_charges(model), densities(model, (0, 2)),
        )


def point_checks(model: ModelSpec, rng: np.random.Generator, report: OracleReport, n: int = DEFAULT_GENERATORS,
                 closed_forms: dict | None = None, gammas: dict | None = None,
                 bundle: SymbolicBundle | None = None) -> None:
    """All pointwise GT identities on one random graded assignment.

    ``gammas`` maps ``(branch, i, j, k)`` to expected Riccati coefficients.
    """
    sym = bundle or SymbolicBundle.build(model)
    pt = GradedPoint(model, rng, n)
    report.record("zero_curvature", zero_curvature_error(pt))
    report.record("backlund", backlund_error(pt))
    report.record("gauge", gauge_error(pt))
    for sol in sym.solutions:
        report.record("riccati", riccati_error(pt, sol))
        for (b, i, j, k), want in (gammas or {}).items():
            if (b, j) == (sol.branch, sol.j):
                report.record("gamma_golden", (pt.ev0(sol.gamma(i, k)) - pt.ev0(want)).max_abs())
        for k in (0, 1, 2):
            report.record("conservation", conservation_error(pt, sol, k))
        num = numeric_defect(pt, sol, 2)
        for k in (0, 1, 2):
            c = sym.contributions.get((sol.j, sol.branch, k))
            if c is not None:
                report.record("defect_series", (pt.ev0(c.value) - num[k]).max_abs())
    ch = sym.charges
    for name in ("E", "P"):
        x_form = pt.ev0(ch[name].value)
        report.record("defect_elimination", (pt.ev0(sym.eliminated[name]) - x_form).max_abs())
        if closed_forms and name in closed_forms:
            report.record("defect_closed_form", (pt.ev0(closed_forms[name]) - x_form).max_abs())
    if closed_forms and "N" in closed_forms:
        report.record("defect_closed_form", (pt.ev0(ch["N"].value) - pt.ev0(closed_forms["N"])).max_abs())
    for b in ("inf", "zero"):
        for k in (0, 2):
            d = {j: pt.ev0(sym.contributions[(j, b, k)].value) for j in (1, 2, 3)}
            report.record("defect_sum_rule", (d[3] - d[1] - d[2]).max_abs())


def periodic_checks(model: ModelSpec, rng: np.random.Generator, report: OracleReport, printed: dict,
                    n: int = DEFAULT_GENERATORS, bundle: SymbolicBundle | None = None,
                    densities: dict | None = None) -> None:
    """Charges equal to printed densities and sum rules, modulo total derivatives.

    Each side is integrated separately so that nothing cancels symbolically.
    """
    sym = bundle or SymbolicBundle.build(model)
    prof = PeriodicProfile(rng, n)
    for name, target in printed.items():
        report.record("charges_mod_dx", np.abs(prof.integral(sym.bulk[name]) - prof.integral(target)).max())
    for key, target in (densities or {}).items():
        report.record("densities_mod_dx", np.abs(prof.integral(sym.densities[key]) - prof.integral(target)).max())
    for b in ("inf", "zero"):
        for k in (0, 2):
            parts = [prof.integral(sym.densities[(j, b, k)]) for j in (1, 2, 3)]
            report.record("sum_rule_mod_dx", np.abs(parts[2] - parts[0] - parts[1]).max())


def run_oracle(model: ModelSpec, samples: int = 100, seed: int = 20240607, n: int = DEFAULT_GENERATORS,
               printed: dict | None = None, closed_forms: dict | None = None,
               gammas: dict | None = None, densities: dict | None = None) -> OracleReport:
    rng = np.random.default_rng(seed)
    report = OracleReport()
    bundle = SymbolicBundle.build(model)
    for _ in range(samples):
        point_checks(model, rng, report, n, closed_forms, gammas, bundle)
        if printed:
            periodic_checks(model, rng, report, printed, n, bundle, densities)
    report.samples = samples
    return report


__all__ = [
    "GradedPoint",
    "OracleReport",
    "PeriodicProfile",
    "batched_mul",
    "conservation_error",
    "gauge_error",
    "numeric_defect",
    "riccati_error",
    "run_oracle",
    "zero_curvature_error",
]
