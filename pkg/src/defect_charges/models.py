"""Lax pairs, field equations, defect matrices and Backlund data for BT, GT and SG.

Fields live on the right half-line; their tilde partners live on the left.
Every model owns a zero-test normal form (:meth:`ModelSpec.reduce`) that
eliminates the tilde side (or, for SG, the first x-derivatives) through the
oriented Backlund relations, so that identities holding only modulo the
defect conditions can be checked structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .symexpr import (
    I,
    LAM,
    ONE,
    ZERO,
    Atom,
    SymExpr,
    UnresolvedSymbol,
    d_x,
    derive,
    exp_nilpotent,
    expi,
    param,
    rewrite_alpha,
    substitute,
    substitute_fixpoint,
)

Matrix = list[list[SymExpr]]

MODEL_NAMES = ("BT", "GT", "SG")
SIZES = {"BT": 2, "GT": 3, "SG": 2}
DEFAULT_PARAMS = {
    "BT": {"m": 1.0, "g": 1.0, "a": 1.0},
    "GT": {"m": 1.0, "g": 1.0, "a": 1.0},
    "SG": {"m": 1.0, "sigma": 1.0},
}


class ModelError(ValueError):
    pass


class InconsistentModel(RuntimeError):
    pass


# --------------------------------------------------------------------------- small helpers


def _f(name: str, dagger=False, odd=False, tilde=False, dx=0, dt=0) -> Atom:
    return Atom(name, dagger, dx, dt, tilde, odd, "field")


ALPHA = Atom("alpha", kind="alpha")


def tilde_map(e: SymExpr) -> SymExpr:
    """Move every bulk field atom (and exponential base) to the tilde side."""
    raw = []
    for (lam, atoms, exps, params), c in e.terms.items():
        raw.append(
            (
                c,
                lam,
                [a._replace(tilde=True) if a.kind == "field" else a for a in atoms],
                [(a._replace(tilde=True) if a.kind == "field" else a, v) for a, v in exps],
                params,
            )
        )
    return SymExpr.from_terms(raw)


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = ZERO
            for p in range(k):
                if A[i][p].terms and B[p][j].terms:
                    acc = acc + A[i][p] * B[p][j]
            row.append(acc)
        out.append(row)
    return out


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_map(A: Matrix, fn: Callable[[SymExpr], SymExpr]) -> Matrix:
    return [[fn(a) for a in row] for row in A]


# --------------------------------------------------------------------------- data types


@dataclass(frozen=True)
class BacklundRuleSet:
    """Defect conditions: algebraic identities (each ``== 0``) plus derivative rules."""

    algebraic: tuple[SymExpr, ...]
    dt_rules: dict
    dx_rules: dict
    elimination: dict = field(default_factory=dict)
    orientation: str = ""


@dataclass
class ModelSpec:
    name: str
    size: int
    params: dict
    fields: tuple[Atom, ...]
    U: Matrix
    V: Matrix
    eom: dict
    K: Matrix
    backlund: BacklundRuleSet
    start_order: int
    odd_index: int | None = None
    fault: str | None = None
    aux_dx: dict = field(default_factory=dict)
    aux_dt: dict = field(default_factory=dict)

    # ---- tilde side
    @property
    def U_tilde(self) -> Matrix:
        return mat_map(self.U, tilde_map)

    @property
    def V_tilde(self) -> Matrix:
        return mat_map(self.V, tilde_map)

    def gamma_odd(self, i: int, j: int) -> bool:
        """Parity of Gamma_ij = Psi_i Psi_j^-1 with Psi_j taken even (1-based)."""
        if self.odd_index is None:
            return False
        return (i == self.odd_index) != (j == self.odd_index)

    # ---- derivations
    def with_aux(self, dx_rules: dict, dt_rules: dict) -> ModelSpec:
        """Copy sharing all data but carrying extra auxiliary-symbol rules."""
        m = ModelSpec(**{**self.__dict__})
        m.aux_dx = {**self.aux_dx, **dx_rules}
        m.aux_dt = {**self.aux_dt, **dt_rules}
        return m

    def _dx_rule(self, a: Atom) -> SymExpr:
        if a.kind in ("field", "alpha"):
            return SymExpr.atom(a.raise_x())
        if a.kind == "boundary":
            r = self.backlund.dx_rules.get(a)
        else:
            r = self.aux_dx.get(a)
        if r is None:
            raise UnresolvedSymbol(f"no x-derivative rule for {a.text()}")
        return r

    def dx(self, e: SymExpr) -> SymExpr:
        return derive(e, self._dx_rule)

    def dx_n(self, e: SymExpr, n: int) -> SymExpr:
        for _ in range(n):
            e = self.dx(e)
        return e

    def _field_dt(self, a: Atom) -> SymExpr:
        """On-shell t-derivative of a field atom with its x-derivatives."""
        if self.name == "SG":
            if a.dt == 0:
                return SymExpr.atom(a.raise_t())
            if a.dt == 1:
                base = self.eom[a._replace(dx=0, tilde=False)]
                if a.tilde:
                    base = tilde_map(base)
                return self.dx_n(base, a.dx)
            raise UnresolvedSymbol(f"unexpected time derivative {a.text()}")
        if a.dt:
            raise UnresolvedSymbol(f"unexpected time derivative {a.text()}")
        base = self.eom.get(a._replace(dx=0, tilde=False))
        if base is None:
            raise UnresolvedSymbol(f"no field equation for {a.text()}")
        if a.tilde:
            base = tilde_map(base)
        return self.dx_n(base, a.dx)

    def _dt_rule(self, a: Atom) -> SymExpr:
        if a.kind == "field":
            return self._field_dt(a)
        if a.kind == "alpha":
            return SymExpr.atom(a.raise_t())
        if a.kind == "boundary":
            r = self.backlund.dt_rules.get(a)
        else:
            r = self.aux_dt.get(a)
        if r is None:
            raise UnresolvedSymbol(f"no t-derivative rule for {a.text()}")
        return r

    def dt(self, e: SymExpr) -> SymExpr:
        """On-shell time derivative (field equations and Backlund/aux rules)."""
        return derive(e, self._dt_rule)

    def subst_eom(self, e: SymExpr) -> SymExpr:
        """Resolve formal time-derivative tags on field atoms."""
        limit = 1 if self.name == "SG" else 0

        def fn(a: Atom):
            if a.kind != "field" or a.dt <= limit:
                return None
            lower = a._replace(dt=a.dt - 1)
            inner = fn(lower)
            return self.dt(inner if inner is not None else SymExpr.atom(lower))

        for a in e.atoms():
            if a.dt and a.kind not in ("field", "alpha"):
                raise UnresolvedSymbol(f"time-derivative tag on non-field symbol {a.text()}")
        return substitute(e, fn)

    # ---- normal form modulo the defect conditions
    def reduce(self, e: SymExpr) -> SymExpr:
        if self.name == "SG":
            return self._reduce_sg(e)
        e = self._eliminate_tilde(e)
        if self.name == "BT":
            e = self._clear_alpha_derivatives(e)
            e = rewrite_alpha(e, self)
        return e

    def is_zero_mod_defect(self, e: SymExpr) -> bool:
        return self.reduce(e).is_zero()

    def _eliminate_tilde(self, e: SymExpr) -> SymExpr:
        elim = self.backlund.elimination

        def fn(a: Atom):
            if a.kind != "field" or not a.tilde:
                return None
            if a.dt:
                raise UnresolvedSymbol(f"resolve time derivatives before eliminating {a.text()}")
            return self.dx_n(elim[a._replace(dx=0)], a.dx)

        return substitute_fixpoint(e, fn)

    def _clear_alpha_derivatives(self, e: SymExpr) -> SymExpr:
        """Multiply by cos(2 alpha) and trade cos(2 alpha) * d alpha for (ga/4m) d(X+X).

        Only valid for zero testing: the result vanishes iff the input does.
        """
        if not any(a.kind == "alpha" and (a.dx or a.dt) for a in e.atoms()):
            return e
        cos2 = (expi(ALPHA, 2) + expi(ALPHA, -2)) * Fraction(1, 2)
        XdX = SymExpr.atom(BT_XD) * SymExpr.atom(BT_X)
        ga4m = param("g") * param("a") / param("m") * Fraction(1, 4)
        subs = {
            ALPHA.raise_x(): ga4m * self.dx(XdX),
            ALPHA.raise_t(): ga4m * self.dt(XdX),
        }
        out = ZERO
        for key, c in e.terms.items():
            lam, atoms, exps, params = key
            found = [a for a in atoms if a.kind == "alpha" and (a.dx or a.dt)]
            if not found:
                out = out + SymExpr({key: c}) * cos2
                continue
            if len(found) > 1 or found[0] not in subs:
                raise InconsistentModel(f"alpha derivatives enter nonlinearly: {found}")
            rest = tuple(a for a in atoms if a != found[0])
            out = out + SymExpr({(lam, rest, exps, params): c}) * subs[found[0]]
        return self._eliminate_tilde(out)

    def _reduce_sg(self, e: SymExpr) -> SymExpr:
        rules = self.backlund.elimination

        def fn(a: Atom):
            if a.kind == "field" and a.dt == 0 and a.dx >= 1:
                return self.dx_n(rules[a._replace(dx=1)], a.dx - 1)
            return None

        return substitute_fixpoint(e, fn)

    # ---- export
    def to_json(self) -> dict:
        def mat(M):
            return [[x.to_json() for x in row] for row in M]

        return {
            "name": self.name,
            "size": self.size,
            "U": mat(self.U),
            "V": mat(self.V),
            "K": mat(self.K),
            "eom": {a.text(): r.to_json() for a, r in sorted(self.eom.items())},
            "backlund": {
                "algebraic": [r.to_json() for r in self.backlund.algebraic],
                "dt_rules": {a.text(): r.to_json() for a, r in sorted(self.backlund.dt_rules.items())},
                "dx_rules": {a.text(): r.to_json() for a, r in sorted(self.backlund.dx_rules.items())},
                "elimination": {a.text(): r.to_json() for a, r in sorted(self.backlund.elimination.items())},
                "orientation": self.backlund.orientation,
            },
        }

    def latex(self) -> str:
        lines = [f"% {self.name} model"]
        for label, M in (("U", self.U), ("V", self.V), ("K", self.K)):
            for i, row in enumerate(M):
                for j, x in enumerate(row):
                    lines.append(f"{label}_{{{i + 1}{j + 1}}} &= {x.latex()} \\\\")
        return "\n".join(lines)


# --------------------------------------------------------------------------- BT


BT_X = Atom("X", kind="boundary")
BT_XD = Atom("X", dagger=True, kind="boundary")


def _bt() -> tuple:
    m, g, a = param("m"), param("g"), param("a")
    p1, p2 = _f("phi1"), _f("phi2")
    p1d, p2d = _f("phi1", True), _f("phi2", True)
    P1, P2, P1d, P2d = (SymExpr.atom(x) for x in (p1, p2, p1d, p2d))
    rho_m = P2d * P2 - P1d * P1
    rho_p = P2d * P2 + P1d * P1
    s = param("m", Fraction(1, 2)) * param("g", Fraction(1, 2))
    inv = LAM ** -1
    q = I * s / 2 * (LAM * P1 + inv * P2)
    r = -I * s / 2 * (LAM * P1d + inv * P2d)
    B = I * s / 2 * (LAM * P1 - inv * P2)
    C = -I * s / 2 * (LAM * P1d - inv * P2d)
    u11 = I / 4 * (g * rho_m - m * (LAM ** 2 - LAM ** -2))
    v11 = -I / 4 * (g * rho_p + m * (LAM ** 2 + LAM ** -2))
    U = [[u11, q], [r, -u11]]
    V = [[v11, B], [C, -v11]]
    eom = {
        p1: d_x(P1) - I * (m * P2 + g * P2d * P2 * P1),
        p2: -d_x(P2) - I * (m * P1 + g * P1d * P1 * P2),
        p1d: d_x(P1d) + I * (m * P2d + g * P1d * P2d * P2),
        p2d: -d_x(P2d) + I * (m * P1d + g * P2d * P1d * P1),
    }
    w, wi = expi(ALPHA, 1), expi(ALPHA, -1)
    X, Xd = SymExpr.atom(BT_X), SymExpr.atom(BT_XD)
    rmg = param("m", Fraction(1, 2)) * param("g", Fraction(-1, 2))
    K = [
        [-rmg * (LAM * wi - I * (LAM * a) ** -1 * w), X],
        [-Xd, rmg * (LAM * w + I * (LAM * a) ** -1 * wi)],
    ]
    T1, T2, T1d, T2d = (tilde_map(x) for x in (P1, P2, P1d, P2d))
    algebraic = (
        X - (T1 * w + P1 * wi),
        X - I / a * (P2 * w - T2 * wi),
        Xd - (T1d * wi + P1d * w),
        Xd - (P2d * wi - T2d * w) / (I * a),
    )
    dens_t = T1d * T1 + P1d * P1 + T2d * T2 + P2d * P2
    dens_x = T1d * T1 + P1d * P1 - T2d * T2 - P2d * P2
    dt_rules = {
        BT_X: m / (2 * a) * (P1 * w - T1 * wi) - I * m / 2 * (T2 * w + P2 * wi) - I * g / 4 * dens_t * X,
        BT_XD: m / (2 * a) * (P1d * wi - T1d * w) + I * m / 2 * (T2d * wi + P2d * w) + I * g / 4 * dens_t * Xd,
    }
    dx_rules = {
        BT_X: m / (2 * a) * (P1 * w - T1 * wi) + I * m / 2 * (T2 * w + P2 * wi) - I * g / 4 * dens_x * X,
        BT_XD: m / (2 * a) * (P1d * wi - T1d * w) - I * m / 2 * (T2d * wi + P2d * w) + I * g / 4 * dens_x * Xd,
    }
    elimination = {
        p1._replace(tilde=True): X * wi - P1 * wi ** 2,
        p2._replace(tilde=True): P2 * w ** 2 + I * a * X * w,
        p1d._replace(tilde=True): Xd * w - P1d * w ** 2,
        p2d._replace(tilde=True): P2d * w ** -2 - I * a * Xd * wi,
    }
    bl = BacklundRuleSet(
        algebraic, dt_rules, dx_rules, elimination,
        orientation="tilde fields eliminated in favour of X, X+ and e^{i alpha}",
    )
    return (p1, p2, p1d, p2d), U, V, eom, K, bl


# --------------------------------------------------------------------------- GT


GT_X = Atom("X", odd=True, kind="boundary")
GT_XD = Atom("X", dagger=True, odd=True, kind="boundary")


def _gt() -> tuple:
    m, g, a = param("m"), param("g"), param("a")
    s1, s2 = _f("psi1", odd=True), _f("psi2", odd=True)
    s1d, s2d = _f("psi1", True, odd=True), _f("psi2", True, odd=True)
    S1, S2, S1d, S2d = (SymExpr.atom(x) for x in (s1, s2, s1d, s2d))
    rho_m = S2d * S2 - S1d * S1
    rho_p = S2d * S2 + S1d * S1
    A = I * g / 2 * rho_p
    h = param("m", Fraction(1, 2)) * param("g", Fraction(1, 2)) * param("2", Fraction(-1, 2))
    inv = LAM ** -1
    q1 = -I * h * (LAM * S1 + inv * S2)
    q2 = I * h * (LAM * S1d - inv * S2d)
    r1 = -I * h * (LAM * S1d + inv * S2d)
    r2 = I * h * (LAM * S1 - inv * S2)
    B1, B2, C1, C2 = -r2, -r1, -q2, -q1
    lm, lp = LAM ** 2 - LAM ** -2, LAM ** 2 + LAM ** -2
    U = [
        [I * g / 2 * rho_m + I * m / 2 * lm, ZERO, q1],
        [ZERO, -I * g / 2 * rho_m + I * m / 2 * lm, q2],
        [r1, r2, I * m * lm],
    ]
    V = [
        [-A + I * m / 2 * lp, ZERO, B1],
        [ZERO, A + I * m / 2 * lp, B2],
        [C1, C2, I * m * lp],
    ]
    eom = {
        s1: d_x(S1) - I * (m * S2 + g * S2d * S2 * S1),
        s2: -d_x(S2) - I * (m * S1 + g * S1d * S1 * S2),
        s1d: d_x(S1d) + I * (m * S2d + g * S2d * S2 * S1d),
        s2d: -d_x(S2d) + I * (m * S1d + g * S1d * S1 * S2d),
    }
    X, Xd = SymExpr.atom(GT_X), SymExpr.atom(GT_XD)
    XX = Xd * X
    c = I * g * a / (2 * m)
    r2gm = param("2", Fraction(1, 2)) * param("g", Fraction(1, 2)) * param("m", Fraction(-1, 2))
    k_minus = LAM * exp_nilpotent(-c * XX) - I * (LAM * a) ** -1 * exp_nilpotent(c * XX)
    k_plus = LAM * exp_nilpotent(c * XX) - I * (LAM * a) ** -1 * exp_nilpotent(-c * XX)
    K = [
        [k_minus, ZERO, r2gm * X],
        [ZERO, k_plus, -r2gm * Xd],
        [r2gm * Xd, -r2gm * X, -(LAM + I * (LAM * a) ** -1)],
    ]
    T1, T2, T1d, T2d = (tilde_map(x) for x in (S1, S2, S1d, S2d))
    algebraic = (
        X - (T1 + S1) - c * T1 * XX,
        X - I / a * (S2 - T2) + g / (2 * m) * XX * S2,
        Xd - (T1d + S1d) + c * T1d * XX,
        Xd + I / a * (S2d - T2d) + g / (2 * m) * XX * S2d,
    )
    dens_t = T1d * T1 + S1d * S1 + T2d * T2 + S2d * S2
    dens_x = T1d * T1 + S1d * S1 - T2d * T2 - S2d * S2
    dt_rules = {
        GT_X: m / (2 * a) * (S1 - T1) - I * m / 2 * (S2 + T2) - I * g / 4 * dens_t * X,
        GT_XD: m / (2 * a) * (S1d - T1d) + I * m / 2 * (S2d + T2d) + I * g / 4 * dens_t * Xd,
    }
    # the printed x-rule for X repeats psi2 where the tilde partner belongs
    dx_rules = {
        GT_X: m / (2 * a) * (S1 - T1) + I * m / 2 * (S2 + T2) - I * g / 4 * dens_x * X,
        GT_XD: m / (2 * a) * (S1d - T1d) - I * m / 2 * (S2d + T2d) + I * g / 4 * dens_x * Xd,
    }
    elimination = {
        s1._replace(tilde=True): X - S1 + c * S1 * XX,
        s2._replace(tilde=True): S2 + I * a * X + c * XX * S2,
        s1d._replace(tilde=True): Xd - S1d - c * S1d * XX,
        s2d._replace(tilde=True): S2d - I * a * Xd - c * XX * S2d,
    }
    bl = BacklundRuleSet(
        algebraic, dt_rules, dx_rules, elimination,
        orientation="tilde fields eliminated in favour of X, X+ (series terminates by nilpotency)",
    )
    return (s1, s2, s1d, s2d), U, V, eom, K, bl


# --------------------------------------------------------------------------- SG


SG_PHI = _f("phi")
SG_PI = SG_PHI.raise_t()


def _sg_sin(atom: Atom, c=1) -> SymExpr:
    return (expi(atom, c) - expi(atom, -c)) / (2 * I)


def _sg() -> tuple:
    m, sigma = param("m"), param("sigma")
    phi, pi = SG_PHI, SG_PI
    Pi, Phx = SymExpr.atom(pi), SymExpr.atom(phi.raise_x())
    e_p, e_m = expi(phi, Fraction(1, 2)), expi(phi, Fraction(-1, 2))
    inv = LAM ** -1
    q = -m / 4 * (LAM * e_p - inv * e_m)
    r = m / 4 * (LAM * e_m - inv * e_p)
    A = -m / 4 * (LAM * e_p + inv * e_m)
    B = m / 4 * (LAM * e_m + inv * e_p)
    U = [[-I / 4 * Pi, q], [r, I / 4 * Pi]]
    V = [[-I / 4 * Phx, A], [B, I / 4 * Phx]]
    # second time derivative of phi
    eom = {pi: SymExpr.atom(phi.raise_x(2)) - m ** 2 * _sg_sin(phi)}
    tphi = phi._replace(tilde=True)
    half = Fraction(1, 2)
    quarter = Fraction(1, 4)
    # exp(i c (phi~ - phi)) and exp(i c (phi~ + phi)) as single exponential atoms
    def ediff(c):
        return expi(tphi, c) * expi(phi, -c)

    def esum(c):
        return expi(tphi, c) * expi(phi, c)

    # the diagonal phases are oriented so that the gauge equations close
    K = [
        [ediff(quarter), sigma * inv * esum(-quarter)],
        [-sigma * inv * esum(quarter), ediff(-quarter)],
    ]
    Tpi = SymExpr.atom(pi._replace(tilde=True))
    sin_sum = (esum(half) - esum(-half)) / (2 * I)
    sin_dif = (ediff(-half) - ediff(half)) / (2 * I)  # sin((phi - phi~)/2)
    phx = Tpi - m * sigma * sin_sum - m / sigma * sin_dif
    tphx = Pi + m * sigma * sin_sum - m / sigma * sin_dif
    elimination = {phi.raise_x(): phx, tphi.raise_x(): tphx}
    algebraic = (
        Phx - phx,
        SymExpr.atom(tphi.raise_x()) - tphx,
    )
    bl = BacklundRuleSet(
        algebraic, {}, {}, elimination,
        orientation="first x-derivatives at the defect eliminated in favour of time derivatives",
    )
    return (phi,), U, V, eom, K, bl


# --------------------------------------------------------------------------- construction


_BUILDERS = {"BT": _bt, "GT": _gt, "SG": _sg}
_CACHE: dict = {}


def build_model(name: str, params: dict | None = None, fault: str | None = None) -> ModelSpec:
    """Build a model; ``params`` are numeric values used only by numerics and evaluation."""
    key = name.upper() if isinstance(name, str) else name
    if key not in _BUILDERS:
        raise ModelError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")
    merged = dict(DEFAULT_PARAMS[key])
    if params:
        unknown = set(params) - set(merged)
        if unknown:
            raise ModelError(f"unknown parameters for {key}: {sorted(unknown)}")
        merged.update(params)
    if merged["m"] <= 0:
        raise ModelError("mass m must be positive")
    if key in ("BT", "GT") and merged["a"] == 0:
        raise ModelError("defect parameter a must be nonzero")
    if key == "SG" and merged["sigma"] == 0:
        raise ModelError("defect parameter sigma must be nonzero")
    if fault not in (None, "k-sign"):
        raise ModelError(f"unknown fault {fault!r}")
    if key not in _CACHE:
        _CACHE[key] = _BUILDERS[key]()
    fields, U, V, eom, K, bl = _CACHE[key]
    if fault == "k-sign":
        K = [row[:] for row in K]
        K[0][-1] = -K[0][-1]
    model = ModelSpec(
        name=key,
        size=SIZES[key],
        params=merged,
        fields=fields,
        U=U,
        V=V,
        eom=eom,
        K=K,
        backlund=bl,
        start_order=1 if key == "GT" else 0,
        odd_index=3 if key == "GT" else None,
        fault=fault,
    )
    check_trace(model)
    return model


# --------------------------------------------------------------------------- structural checks


def check_trace(model: ModelSpec) -> None:
    """Trace-free (sl(2)) or supertrace-free (sl(2,1), third index odd)."""
    for M, label in ((model.U, "U"), (model.V, "V")):
        if model.name == "GT":
            tr = M[0][0] + M[1][1] - M[2][2]
        else:
            tr = M[0][0] + M[1][1]
        if tr.terms:
            raise InconsistentModel(f"{model.name} {label} is not (super)trace-free: {tr}")


def zero_curvature_residual(model: ModelSpec) -> Matrix:
    U, V = model.U, model.V
    dU = mat_map(U, model.dt)
    dV = mat_map(V, model.dx)
    comm = mat_sub(mat_mul(U, V), mat_mul(V, U))
    return mat_add(mat_sub(dU, dV), comm)


def defect_gauge_residual(model: ModelSpec, reduce: bool = True) -> tuple[Matrix, Matrix]:
    """R_t = dK/dt - V~K + KV and R_x = dK/dx - U~K + KU, reduced modulo the defect conditions."""
    K = model.K
    Rt = mat_sub(mat_map(K, model.dt), mat_sub(mat_mul(model.V_tilde, K), mat_mul(K, model.V)))
    Rx = mat_sub(mat_map(K, model.dx), mat_sub(mat_mul(model.U_tilde, K), mat_mul(K, model.U)))
    if reduce:
        Rt = mat_map(Rt, model.reduce)
        Rx = mat_map(Rx, model.reduce)
    return Rt, Rx


def residual_report(M: Matrix) -> list[str]:
    """Describe nonzero entries with their offending lambda coefficients."""
    from .symexpr import laurent_split

    lines = []
    for i, row in enumerate(M):
        for j, x in enumerate(row):
            if x.terms:
                for k, c in laurent_split(x).items():
                    lines.append(f"[{i + 1},{j + 1}] lambda^{k}: {c}")
    return lines


def is_zero_matrix(M: Matrix) -> bool:
    return all(not x.terms for row in M for x in row)


def backlund_elimination_consistent(model: ModelSpec) -> list[SymExpr]:
    """Substituting the oriented elimination into each algebraic relation must give zero."""
    out = []
    for rel in model.backlund.algebraic:
        out.append(model.reduce(rel) if model.name != "BT" else rewrite_alpha(model._eliminate_tilde(rel), model))
    return out


def hermiticity_pairs(model: ModelSpec) -> list[tuple[SymExpr, SymExpr]]:
    """Pairs (conj(x), y) that must coincide under the formal conjugation map (BT)."""
    if model.name != "BT":
        return []
    U, V = model.U, model.V
    return [(U[0][1].conj_map(), U[1][0]), (V[0][1].conj_map(), V[1][0])]
