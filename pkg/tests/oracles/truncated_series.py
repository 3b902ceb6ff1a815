"""Independent truncated-series oracle for the BT Riccati coefficients.

Works entirely in sympy: substitute Gamma_21 = sum_k c_k(x) lam^-k into the
scalar Riccati equation for the first column around lam = oo, collect powers
of lam and solve the triangular system one coefficient at a time.  The result
is converted to a SymExpr so it can be compared with the hand-written solver.
"""

from __future__ import annotations

from fractions import Fraction

import sympy as sp

from defect_charges.symexpr import ZERO, Atom, Q, SymExpr, param

x = sp.Symbol("x", real=True)
lam = sp.Symbol("lam")
m, g = sp.symbols("m g", positive=True)

FIELDS = {
    "phi1": sp.Function("phi1")(x),
    "phi1+": sp.Function("phi1d")(x),
    "phi2": sp.Function("phi2")(x),
    "phi2+": sp.Function("phi2d")(x),
}
_BY_FUNC = {f.func: k for k, f in FIELDS.items()}


def bt_gamma21_series(degree: int = 6) -> dict[int, sp.Expr]:
    p1, p1d, p2, p2d = (FIELDS[k] for k in ("phi1", "phi1+", "phi2", "phi2+"))
    s = sp.sqrt(m * g)
    q = sp.I / 2 * s * (lam * p1 + p2 / lam)
    r = -sp.I / 2 * s * (lam * p1d + p2d / lam)
    rho = p2d * p2 - p1d * p1
    c = [sp.Function(f"c{k}")(x) for k in range(degree + 1)]
    gam = sum(c[k] * lam ** (-k) for k in range(1, degree + 1))
    eq = sp.diff(gam, x) - r + sp.I / 2 * (g * rho - m * (lam**2 - lam ** (-2))) * gam + q * gam**2
    eq = sp.expand(eq * lam ** (2 * degree + 2))
    poly = sp.Poly(eq, lam)
    solved: dict[int, sp.Expr] = {}
    # c_k first appears (linearly, via the lam^2 term) at lam^(2-k)
    for k in range(1, degree + 1):
        coef = poly.coeff_monomial(lam ** (2 * degree + 4 - k))
        coef = coef.subs({c[i]: solved[i] for i in sorted(solved, reverse=True)}).doit()
        sol = sp.solve(sp.Eq(coef, 0), c[k])
        if len(sol) != 1:
            raise RuntimeError(f"no unique solution for c{k}")
        solved[k] = sp.expand(sol[0])
    return solved


def _atom_of(e) -> Atom:
    n = 0
    if isinstance(e, sp.Derivative):
        n = int(sum(cnt for _, cnt in e.variable_count))
        e = e.expr
    key = _BY_FUNC[e.func]
    return Atom(key.rstrip("+"), key.endswith("+"), n)


def to_symexpr(e: sp.Expr) -> SymExpr:
    out = ZERO
    for term in sp.Add.make_args(sp.expand(e)):
        if term == 0:
            continue
        coef = SymExpr.const(1)
        for f in sp.Mul.make_args(term):
            base, ex = f.as_base_exp()
            if base == m or base == g:
                coef = coef * param(str(base), Fraction(str(ex)))
            elif base.is_Number or base == sp.I:
                re, im = sp.re(f), sp.im(f)
                coef = coef * _q(re, im)
            elif isinstance(base, (sp.Derivative, sp.core.function.AppliedUndef)):
                coef = coef * SymExpr.atom(_atom_of(base)) ** int(ex)
            else:
                raise TypeError(f"unexpected factor {f}")
        out = out + coef
    return out


def _q(re, im):
    return Q(Fraction(str(re)), Fraction(str(im)))
