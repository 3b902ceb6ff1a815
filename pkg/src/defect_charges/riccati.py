"""Order-by-order solution of the Riccati equations and bulk conserved densities.

For a fixed column ``j`` the ratios ``Gamma_ij = Psi_i Psi_j^{-1}`` obey

    d_x Gamma_ij = U_ij - Gamma_ij U_jj + sum_{k != j} (U_ik - Gamma_ij U_jk) Gamma_kj

with ``Gamma_ij`` kept to the left of ``U``.  The ``t`` equation is the same with
``V``.  Around ``lambda = 0`` we substitute ``lambda -> 1/lambda`` in ``U`` and ``V``
and reuse the expansion around infinity, so order ``k`` always means the
``lambda^{-k}`` coefficient of the working variable.

Each unknown is solved in one of three ways:

* pivot: ``U_ii - U_jj`` has an invertible scalar top coefficient ``c`` at
  ``lambda^p``; the equation at ``lambda^P`` fixes ``Gamma^{(p-P)} = -R/c``;
* seeded: the leading coefficient solves a quadratic (sine-Gordon); we take
  the principal square root and pivot on the linearization;
* differential: no scalar pivot exists (Grassmannian Thirring ``Gamma_21``,
  ``Gamma_12``); every coefficient becomes an auxiliary symbol whose x- and
  t-derivatives are read off the Riccati equations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

from .models import ModelSpec, mat_map
from .symexpr import (
    ZERO,
    Atom,
    Q,
    SymExpr,
    d_x,
    flip_lambda,
    laurent_split,
    sqrt_monomial,
)

Series = dict  # power -> SymExpr


class RiccatiError(RuntimeError):
    pass


@dataclass(frozen=True)
class AuxSymbol:
    atom: Atom
    dx_rule: SymExpr | None
    dt_rule: SymExpr | None

    @property
    def name(self) -> str:
        return self.atom.name

    @property
    def parity(self) -> int:
        return int(self.atom.odd)


@dataclass
class RiccatiSolution:
    model: ModelSpec
    j: int
    branch: str
    max_order: int
    coeffs: dict  # (i, k) -> SymExpr
    aux: dict  # (i, k) -> AuxSymbol
    modes: dict  # i -> "pivot" | "seeded" | "differential"
    known: dict = field(default_factory=dict)  # i -> highest order available

    def gamma(self, i: int, k: int) -> SymExpr:
        if i == self.j:
            raise KeyError("Gamma_jj is not an unknown")
        if k > self.known[i]:
            raise RiccatiError(f"Gamma_{i}{self.j}^({k}) was not computed")
        return self.coeffs.get((i, k), ZERO)

    def series(self, i: int) -> Series:
        return {-k: v for (ii, k), v in self.coeffs.items() if ii == i and v.terms}

    def aux_rules(self) -> tuple[dict, dict]:
        dx = {s.atom: s.dx_rule for s in self.aux.values() if s.dx_rule is not None}
        dt = {s.atom: s.dt_rule for s in self.aux.values() if s.dt_rule is not None}
        return dx, dt

    def extended_model(self) -> ModelSpec:
        return self.model.with_aux(*self.aux_rules())

    def working_U(self):
        return _working(self.model.U, self.branch)

    def working_V(self):
        return _working(self.model.V, self.branch)


# --------------------------------------------------------------------------- series helpers


def _working(M, branch: str):
    if branch == "inf":
        return M
    if branch == "zero":
        return mat_map(M, flip_lambda)
    raise ValueError(f"branch must be 'inf' or 'zero', got {branch!r}")


def _split(M):
    return [[laurent_split(x) for x in row] for row in M]


def coeff2(A: Series, B: Series, P: int) -> SymExpr:
    acc = ZERO
    for pa, ca in A.items():
        cb = B.get(P - pa)
        if cb is not None:
            acc = acc + ca * cb
    return acc


def coeff3(A: Series, B: Series, C: Series, P: int) -> SymExpr:
    acc = ZERO
    for pa, ca in A.items():
        for pb, cb in B.items():
            cc = C.get(P - pa - pb)
            if cc is not None:
                acc = acc + ca * cb * cc
    return acc


def series_mul(A: Series, B: Series, lowest: int) -> Series:
    out: Series = {}
    for pa, ca in A.items():
        for pb, cb in B.items():
            p = pa + pb
            if p < lowest:
                continue
            prod = ca * cb
            if prod.terms:
                out[p] = out[p] + prod if p in out else prod
    return {p: v for p, v in out.items() if v.terms}


def _top(s: Series):
    live = [p for p, v in s.items() if v.terms]
    if not live:
        return None, ZERO
    p = max(live)
    return p, s[p]


def _diff(a: Series, b: Series) -> Series:
    out = dict(a)
    for p, v in b.items():
        out[p] = out.get(p, ZERO) - v
    return {p: v for p, v in out.items() if v.terms}


# --------------------------------------------------------------------------- the solver


def _rhs(Ms, j: int, i: int, G: dict, P: int, n: int) -> SymExpr:
    """Coefficient of lambda^P in the right-hand side of the Riccati equation for Gamma_ij."""
    out = Ms[i][j].get(P, ZERO)
    others = [k for k in range(n) if k != j]
    for k in others:
        out = out + coeff2(Ms[i][k], G[k], P)
    out = out - coeff2(G[i], Ms[j][j], P)
    for k in others:
        out = out - coeff3(G[i], Ms[j][k], G[k], P)
    return out


def _aux_atom(model: ModelSpec, i: int, j: int, k: int, branch: str) -> Atom:
    stem = "G" if branch == "inf" else "Gh"
    return Atom(f"{stem}{i + 1}{j + 1}_{k}", odd=model.gamma_odd(i + 1, j + 1), kind="aux")


def _classify(model: ModelSpec, Us, j: int, n: int):
    """Return ``(modes, pivots, seeds)`` keyed by zero-based row index."""
    modes, pivots, seeds = {}, {}, {}
    for i in range(n):
        if i == j:
            continue
        J = _diff(Us[i][i], Us[j][j])
        pJ, cJ = _top(J)
        pq, cq = _top(Us[i][j])
        pr, cr = _top(Us[j][i])
        seedable = (
            n == 2
            and model.start_order == 0
            and model.odd_index is None
            and pq is not None
            and pq == pr
            and (pJ is None or pJ < pq)
        )
        if seedable:
            g0 = sqrt_monomial(cq / cr)
            lin = {p: v for p, v in J.items()}
            for p, v in Us[j][i].items():
                lin[p] = lin.get(p, ZERO) - g0 * v * 2
            p_lin, c_lin = _top({p: v for p, v in lin.items() if v.terms})
            if not c_lin.is_scalar_monomial():
                raise RiccatiError(f"seeded Gamma_{i + 1}{j + 1}: linearization has no scalar pivot")
            modes[i], pivots[i], seeds[i] = "seeded", (p_lin, c_lin), g0
        elif pJ is not None and pJ >= 1 and cJ.is_scalar_monomial() and not any(
            key[2] for key in cJ.terms
        ):
            modes[i], pivots[i] = "pivot", (pJ, cJ)
        else:
            modes[i] = "differential"
    return modes, pivots, seeds


def solve_riccati(model: ModelSpec, j: int, branch: str = "inf", max_order: int = 4) -> RiccatiSolution:
    """Solve for ``Gamma_ij`` (``j`` is 1-based) through the orders needed by ``max_order`` densities."""
    key = (id(model), j, branch, max_order)
    hit = _CACHE.get(key)
    if hit is not None and hit.model is model:
        return hit
    sol = _solve(model, j - 1, branch, max_order)
    _CACHE[key] = sol
    return sol


_CACHE: dict = {}


def _solve(model: ModelSpec, j: int, branch: str, max_order: int) -> RiccatiSolution:
    n = model.size
    if not 0 <= j < n:
        raise ValueError(f"column index must be in 1..{n}")
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    Us = _split(_working(model.U, branch))
    Vs = _split(_working(model.V, branch))
    start = model.start_order
    modes, pivots, seeds = _classify(model, Us, j, n)
    k_alg = max_order + 2
    k_aux = max_order + 1

    G: dict = {i: {} for i in range(n)}
    G[j] = {}
    coeffs: dict = {}
    aux_atoms: dict = {}
    aux_dx: dict = {}
    for i, mode in modes.items():
        if mode == "seeded":
            G[i][-start] = seeds[i]
            coeffs[(i, start)] = seeds[i]
        if mode == "differential":
            for k in range(start, k_alg + 2):
                a = _aux_atom(model, i, j, k, branch)
                aux_atoms[(i, k)] = a
                G[i][-k] = SymExpr.atom(a)
                coeffs[(i, k)] = SymExpr.atom(a)

    algebraic = [i for i in sorted(modes) if modes[i] != "differential"]
    differential = [i for i in sorted(modes) if modes[i] == "differential"]
    top = max(max((p for p in Us[a][b]), default=0) for a in range(n) for b in range(n))
    p_min = min([pivots[i][0] - k_alg for i in algebraic] + [-k_aux])

    ext = model.with_aux({}, {})
    for P in range(top, p_min - 1, -1):
        for i in algebraic:
            p_i, c_i = pivots[i]
            k = p_i - P
            if k > k_alg:
                continue
            residual = _rhs(Us, j, i, G, P, n) - _dx_known(ext, G[i].get(P))
            if k < start or (modes[i] == "seeded" and k == start):
                if residual.terms:
                    raise RiccatiError(
                        f"Gamma_{i + 1}{j + 1}: consistency condition at lambda^{P} fails: {residual}"
                    )
                continue
            val = -(residual * c_i.inverse())
            if val.terms:
                G[i][-k] = val
            coeffs[(i, k)] = val
        for i in differential:
            k = -P
            if k < start:
                residual = _rhs(Us, j, i, G, P, n)
                if residual.terms:
                    raise RiccatiError(
                        f"Gamma_{i + 1}{j + 1}: consistency condition at lambda^{P} fails: {residual}"
                    )
                continue
            if k > k_aux:
                continue
            rule = _rhs(Us, j, i, G, P, n)
            aux_dx[aux_atoms[(i, k)]] = rule
            ext.aux_dx[aux_atoms[(i, k)]] = rule

    known = {}
    for i in modes:
        known[i + 1] = k_aux if modes[i] == "differential" else k_alg

    aux_dt: dict = {}
    for (i, k), a in aux_atoms.items():
        if k > max_order:
            continue
        aux_dt[a] = _rhs(Vs, j, i, G, -k, n)

    aux = {}
    for (i, k), a in aux_atoms.items():
        if k > k_aux:
            continue
        aux[(i + 1, k)] = AuxSymbol(a, aux_dx.get(a), aux_dt.get(a))
    out_coeffs = {(i + 1, k): v for (i, k), v in coeffs.items() if k <= known[i + 1]}
    return RiccatiSolution(
        model=model,
        j=j + 1,
        branch=branch,
        max_order=max_order,
        coeffs=out_coeffs,
        aux=aux,
        modes={i + 1: m for i, m in modes.items()},
        known=known,
    )


def _dx_known(model: ModelSpec, e: SymExpr | None) -> SymExpr:
    if e is None or not e.terms:
        return ZERO
    return model.dx(e)


def riccati_residual(sol: RiccatiSolution, i: int, P: int, direction: str = "x") -> SymExpr:
    """Residual of the x (or t) Riccati equation for ``Gamma_ij`` at ``lambda^P``.

    Only meaningful for powers whose every contributing coefficient was computed.
    """
    n = sol.model.size
    Ms = _split(sol.working_U() if direction == "x" else sol.working_V())
    G = {r: {} for r in range(n)}
    for (r, k), v in sol.coeffs.items():
        if v.terms:
            G[r - 1][-k] = v
    lhs_src = G[i - 1].get(P)
    ext = sol.extended_model()
    if lhs_src is None:
        lhs = ZERO
    elif direction == "x":
        lhs = ext.dx(lhs_src)
    else:
        lhs = ext.dt(lhs_src)
    return _rhs(Ms, sol.j - 1, i - 1, G, P, n) - lhs


# --------------------------------------------------------------------------- densities


def _density_from(Ms, sol: RiccatiSolution, k: int) -> SymExpr:
    j = sol.j - 1
    n = sol.model.size
    P = -k
    out = Ms[j][j].get(P, ZERO)
    for i in range(n):
        if i == j:
            continue
        for p, c in Ms[j][i].items():
            order = p - P
            if order < sol.model.start_order:
                continue
            out = out + c * sol.gamma(i + 1, order)
    return out


def drop_constants(e: SymExpr) -> SymExpr:
    """Remove field-free, exponential-free terms (vacuum constants)."""
    return SymExpr({key: c for key, c in e.terms.items() if key[1] or key[2]})


def conserved_density(sol: RiccatiSolution, k: int) -> SymExpr:
    """Order-``k`` coefficient of ``U_jj + sum_i U_ji Gamma_ij``, vacuum constants dropped."""
    return drop_constants(_density_from(_split(sol.working_U()), sol, k))


def conserved_flux(sol: RiccatiSolution, k: int) -> SymExpr:
    """Order-``k`` coefficient of ``V_jj + sum_i V_ji Gamma_ij``."""
    return _density_from(_split(sol.working_V()), sol, k)


def conservation_residual(sol: RiccatiSolution, k: int) -> SymExpr:
    """``d_t rho - d_x flux`` on shell; vanishes identically for a genuine conservation law."""
    ext = sol.extended_model()
    return ext.dt(conserved_density(sol, k)) - ext.dx(conserved_flux(sol, k))


def densities(model: ModelSpec, orders, branches=("inf", "zero")) -> dict:
    """``{(j, branch, k): density}`` for every column."""
    top = max(orders)
    out = {}
    for branch in branches:
        for j in range(1, model.size + 1):
            sol = solve_riccati(model, j, branch, top)
            for k in orders:
                out[(j, branch, k)] = conserved_density(sol, k)
    return out


def combine(model: ModelSpec, I: dict) -> dict[str, SymExpr]:
    """Form number, energy and momentum from order-indexed quantities.

    ``I`` maps ``(j, branch, k)`` to a bulk density or, equally, to a defect
    contribution; the same linear combinations apply to both.
    """
    from .symexpr import I as IU, param

    def q(j, b, k):
        return I[(j, b, k)]

    m, g = param("m"), param("g")
    if model.name == "BT":
        d0 = q(1, "inf", 0) - q(2, "inf", 0)
        h0 = q(1, "zero", 0) - q(2, "zero", 0)
        d2 = q(1, "inf", 2) - q(2, "inf", 2)
        h2 = q(1, "zero", 2) - q(2, "zero", 2)
        c = IU * m / g * Fraction(1, 2)
        return {
            "N": (d0 - h0) * (IU * g).inverse(),
            "E": c * (d2 - h2),
            "P": c * (d2 + h2),
        }
    if model.name == "GT":
        def blk(b, k):
            if k == 0:
                return q(1, b, 0) - q(2, b, 0) - q(3, b, 0)
            return q(1, b, k) + q(2, b, k) + q(3, b, k)

        c2 = m * (IU * g * 8).inverse()
        return {
            "N": (blk("inf", 0) - blk("zero", 0)) * (IU * g * 2).inverse(),
            "E": c2 * (blk("inf", 2) - blk("zero", 2)),
            "P": c2 * (blk("inf", 2) + blk("zero", 2)),
        }
    if model.name == "SG":
        a = q(1, "inf", 1) - q(2, "inf", 1)
        b = q(1, "zero", 1) - q(2, "zero", 1)
        return {"E": IU * m * (a - b), "P": IU * m * (a + b)}
    raise ValueError(model.name)


def charge_orders(model: ModelSpec) -> tuple[int, ...]:
    return (1,) if model.name == "SG" else (0, 2)


def bulk_charges(model: ModelSpec) -> dict[str, SymExpr]:
    return combine(model, densities(model, charge_orders(model)))


def gt_sum_rule_residuals(model: ModelSpec) -> list[SymExpr]:
    """``I_3 - (I_1 + I_2)`` for orders 0 and 2 and both branches; each must be a total derivative."""
    I = densities(model, (0, 2))
    return [
        I[(3, b, k)] - I[(1, b, k)] - I[(2, b, k)] for b in ("inf", "zero") for k in (0, 2)
    ]


# --------------------------------------------------------------------------- modulo total derivatives


def _jet_base(a: Atom) -> Atom:
    return a._replace(dx=0)


def partial(e: SymExpr, u: Atom) -> SymExpr:
    """Left partial derivative with respect to a jet variable (graded for odd ``u``)."""
    raw = []
    for (lam, atoms, exps, params), c in e.terms.items():
        odd_before = 0
        for p, a in enumerate(atoms):
            if a == u:
                sign = -1 if (u.odd and odd_before % 2) else 1
                raw.append((c * Q(sign), lam, atoms[:p] + atoms[p + 1 :], exps, params))
            if a.odd:
                odd_before += 1
        for a, v in exps:
            if a == u:
                raw.append((c * Q(0, v), lam, atoms, exps, params))
    return SymExpr.from_terms(raw)


def euler_operator(e: SymExpr, base: Atom) -> SymExpr:
    """Variational derivative ``sum_n (-D_x)^n d e / d u_n``."""
    top = 0
    for a in e.atoms() | e.exp_atoms():
        if a.kind == "field" and _jet_base(a) == base:
            top = max(top, a.dx)
    out = ZERO
    for n in range(top, -1, -1):
        term = partial(e, base.raise_x(n))
        for _ in range(n):
            term = -d_x(term)
        out = out + term
    return out


def _field_bases(e: SymExpr) -> set[Atom]:
    return {_jet_base(a) for a in e.atoms() | e.exp_atoms() if a.kind == "field"}


def _constant_part(e: SymExpr) -> SymExpr:
    return SymExpr({k: c for k, c in e.terms.items() if not k[1] and not k[2]})


def is_total_derivative(e: SymExpr) -> bool:
    """True iff ``e`` is ``d_x`` of a local expression (field-free constants excluded)."""
    if any(a.kind != "field" for a in e.atoms() | e.exp_atoms()):
        raise ValueError("total-derivative test needs an expression in bulk fields only")
    if _constant_part(e).terms:
        return False
    return all(not euler_operator(e, u).terms for u in _field_bases(e))


def _rank(key):
    """Monomial order for elimination: more derivatives on a single atom ranks higher."""
    lam, atoms, exps, params = key
    dxs = sorted((a.dx for a in atoms), reverse=True)
    return (dxs[0] if dxs else -1, tuple(dxs), len(atoms), repr(key))


def _ibp_class(key):
    lam, atoms, exps, params = key
    exp_bases = {a for a, _ in exps}
    rest = tuple(sorted(_jet_base(a) for a in atoms if _jet_base(a) not in exp_bases))
    weight = sum(a.dx for a in atoms)
    return (lam, exps, params, weight, rest)


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for tail in _compositions(total - first, parts - 1):
            yield (first,) + tail


def _ibp_candidates(cls, n_exp: int) -> list[SymExpr]:
    """Every monomial whose x-derivative can land in class ``cls``."""
    lam, exps, params, weight, rest = cls
    if weight == 0:
        return []
    exp_bases = sorted({a for a, _ in exps})
    seen, out = set(), []
    for k in range(n_exp + 1):
        for extra in combinations_with_replacement(exp_bases, k):
            bases = list(rest) + list(extra)
            for dist in _compositions(weight - 1, len(bases)):
                atoms = [b.raise_x(d) if d else b for b, d in zip(bases, dist)]
                mono = SymExpr.from_terms([(Q(1), lam, atoms, exps, params)])
                if not mono.terms:
                    continue
                (key,) = mono.terms
                if key not in seen:
                    seen.add(key)
                    out.append(mono)
    return out


def _reduced_rows(rows: list[dict]) -> dict:
    """Reduced row echelon form; returns ``{pivot: row}`` with unit pivots."""
    pivots: dict = {}
    for row in rows:
        row = dict(row)
        for p, prow in pivots.items():
            c = row.get(p)
            if c:
                for k, v in prow.items():
                    row[k] = row.get(k, Q(0)) - c * v
                row = {k: v for k, v in row.items() if v}
        if not row:
            continue
        p = max(row, key=_rank)
        inv = Q(1) / row[p]
        row = {k: v * inv for k, v in row.items()}
        for q, qrow in pivots.items():
            c = qrow.get(p)
            if c:
                for k, v in row.items():
                    qrow[k] = qrow.get(k, Q(0)) - c * v
                pivots[q] = {k: v for k, v in qrow.items() if v}
        pivots[p] = row
    return pivots


def ibp_normal_form(e: SymExpr) -> SymExpr:
    """Canonical representative of ``e`` modulo total x-derivatives.

    Monomials are grouped by (lambda power, exponentials, parameters, total
    derivative weight, non-exponential field content).  Within a group ``e`` is
    reduced against the span of ``d_x`` of every monomial of one lower weight,
    eliminating the highest-ranked monomials first; the reduced echelon basis is
    unique, so two expressions in the same groups that differ by a total
    derivative reduce to the same form.
    """
    groups: dict = {}
    for key, c in e.terms.items():
        groups.setdefault(_ibp_class(key), {})[key] = c
    out = ZERO
    for cls, terms in groups.items():
        exp_bases = {a for a, _ in cls[1]}
        n_exp = max(sum(1 for a in key[1] if _jet_base(a) in exp_bases) for key in terms)
        rows = [d_x(w).terms for w in _ibp_candidates(cls, n_exp)]
        pivots = _reduced_rows([r for r in rows if r])
        acc = dict(terms)
        for p, row in pivots.items():
            c = terms.get(p)
            if c:
                for k, v in row.items():
                    acc[k] = acc.get(k, Q(0)) - c * v
        out = out + SymExpr({k: v for k, v in acc.items() if v})
    return out


def equal_mod_total_derivative(a: SymExpr, b: SymExpr) -> bool:
    return is_total_derivative(a - b) if (a - b).terms else True


__all__ = [
    "AuxSymbol",
    "RiccatiError",
    "RiccatiSolution",
    "bulk_charges",
    "charge_orders",
    "combine",
    "conservation_residual",
    "conserved_density",
    "conserved_flux",
    "densities",
    "equal_mod_total_derivative",
    "euler_operator",
    "gt_sum_rule_residuals",
    "ibp_normal_form",
    "is_total_derivative",
    "partial",
    "riccati_residual",
    "solve_riccati",
]
