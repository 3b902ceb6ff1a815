"""Differential polynomials in graded field atoms, exponential atoms and a Laurent variable.

A monomial is keyed by ``(lam, atoms, exps, params)``:

* ``lam``    integer power of the spectral parameter,
* ``atoms``  canonically sorted tuple of :class:`Atom` (odd atoms anticommute),
* ``exps``   sorted tuple of ``(Atom, Fraction)``; the monomial carries the factor
  ``exp(i * sum(c * atom))``,
* ``params`` sorted tuple of ``(name, Fraction)`` for the positive constants
  m, g, a, sigma and the surd base ``"2"`` (exponent kept in {0, 1/2}).

Coefficients are exact Gaussian rationals (:class:`Q`).
"""

from __future__ import annotations

import cmath
import json
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple

import numpy as np

PARAM_ORDER = ("2", "m", "g", "a", "sigma")


class UnresolvedSymbol(KeyError):
    pass


class NotInvertible(ValueError):
    pass


# --------------------------------------------------------------------------- coefficients


class Q:
    """Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @classmethod
    def coerce(cls, x) -> Q:
        if isinstance(x, Q):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x, 0)
        if isinstance(x, complex):
            re, im = x.real, x.imag
            if re != int(re) or im != int(im):
                raise TypeError(f"only integral complex literals are exact: {x!r}")
            return cls(int(re), int(im))
        raise TypeError(f"cannot use {type(x).__name__} as an exact coefficient")

    def __add__(self, o):
        return Q(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return Q(self.re - o.re, self.im - o.im)

    def __mul__(self, o):
        return Q(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __truediv__(self, o):
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero coefficient")
        return Q((self.re * o.re + self.im * o.im) / den, (self.im * o.re - self.re * o.im) / den)

    def __neg__(self):
        return Q(-self.re, -self.im)

    def __eq__(self, o):
        if not isinstance(o, Q):
            try:
                o = Q.coerce(o)
            except TypeError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def conj(self) -> Q:
        return Q(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}i)"


ZERO_Q = Q(0)
ONE_Q = Q(1)
I_Q = Q(0, 1)


# --------------------------------------------------------------------------- atoms


class Atom(NamedTuple):
    """A field symbol with derivative orders.

    Field order (name, dagger, dx, dt, tilde) is the canonical sort key, so
    tuple comparison gives the canonical atom order directly.
    """

    name: str
    dagger: bool = False
    dx: int = 0
    dt: int = 0
    tilde: bool = False
    odd: bool = False
    kind: str = "field"  # field | boundary | aux | alpha

    @property
    def base(self) -> Atom:
        return self._replace(dx=0, dt=0)

    def raise_x(self, n: int = 1) -> Atom:
        return self._replace(dx=self.dx + n)

    def raise_t(self, n: int = 1) -> Atom:
        return self._replace(dt=self.dt + n)

    def text(self) -> str:
        s = self.name + ("~" if self.tilde else "") + ("+" if self.dagger else "")
        if self.dx or self.dt:
            s += "_" + "x" * self.dx + "t" * self.dt
        return s

    def latex(self) -> str:
        return atom_latex(self)

    def to_json(self) -> list:
        return [self.name, self.dagger, self.dx, self.dt, self.tilde, self.odd, self.kind]

    @classmethod
    def from_json(cls, data) -> Atom:
        name, dagger, dx, dt, tilde, odd, kind = data
        return cls(name, bool(dagger), int(dx), int(dt), bool(tilde), bool(odd), kind)


_GREEK = {"phi": r"\varphi", "alpha": r"\alpha"}


def atom_latex(a: Atom) -> str:
    name = a.name
    if name.startswith("G") and a.kind == "aux":
        # aux names look like G21_1 or Gh21_1
        hat = name.startswith("Gh")
        idx, order = name[2 if hat else 1 :].split("_")
        core = rf"\Gamma_{{{idx}}}^{{({order})}}"
        if hat:
            core = r"\widehat" + core
        return core
    if name in _GREEK:
        core = _GREEK[name]
    elif name[:-1] in ("phi", "psi") and name[-1].isdigit():
        core = rf"\{name[:-1]}_{name[-1]}"
    else:
        core = name
    if a.tilde:
        core = rf"\widetilde{{{core}}}"
    if a.dagger:
        core = core + r"^\dagger"
    if a.dt:
        core = rf"\partial_t^{{{a.dt}}}{core}" if a.dt > 1 else rf"\partial_t {core}"
    if a.dx:
        core = rf"\partial_x^{{{a.dx}}}{core}" if a.dx > 1 else rf"\partial_x {core}"
    if a.dx or a.dt:
        core = f"({core})"
    return core


# --------------------------------------------------------------------------- monomial helpers


def _merge_atoms(left: tuple, right: tuple):
    """Product of two canonically ordered atom tuples. Returns (sign, atoms)."""
    if not left:
        return 1, right
    if not right:
        return 1, left
    out = []
    sign = 1
    i = j = 0
    nl, nr = len(left), len(right)
    # number of odd atoms remaining in ``left`` from position i on
    odd_rem = sum(1 for a in left if a.odd)
    while i < nl and j < nr:
        a, b = left[i], right[j]
        if a <= b:
            if a == b and a.odd:
                return 0, ()
            out.append(a)
            if a.odd:
                odd_rem -= 1
            i += 1
        else:
            if b.odd and odd_rem & 1:
                sign = -sign
            out.append(b)
            j += 1
    out.extend(left[i:])
    out.extend(right[j:])
    return sign, tuple(out)


def _sort_atoms(atoms: Iterable[Atom]):
    """Canonically sort an arbitrary atom sequence, tracking the graded sign."""
    sign = 1
    result: tuple = ()
    for a in atoms:
        s, result = _merge_atoms(result, (a,))
        if s == 0:
            return 0, ()
        sign *= s
    return sign, result


def _merge_lin(x: tuple, y: tuple) -> tuple:
    if not x:
        return tuple(kv for kv in y if kv[1])
    if not y:
        return tuple(kv for kv in x if kv[1])
    acc = dict(x)
    for k, v in y:
        acc[k] = acc.get(k, 0) + v
    return tuple(sorted((k, v) for k, v in acc.items() if v != 0))


def _norm_params(acc: dict):
    """Normalize a parameter-exponent dict. Returns (rational factor, params tuple)."""
    factor = Fraction(1)
    e2 = acc.get("2")
    if e2 is not None:
        whole = e2 // 1 if e2.denominator == 1 else (e2 - Fraction(1, 2)) // 1
        rem = e2 - whole
        if rem not in (0, Fraction(1, 2)):
            raise ValueError(f"unsupported power of 2: {e2}")
        factor = Fraction(2) ** int(whole)
        acc = dict(acc)
        acc["2"] = rem
    items = tuple(
        sorted(((k, v) for k, v in acc.items() if v != 0), key=lambda kv: PARAM_ORDER.index(kv[0]))
    )
    return factor, items


def _merge_params(x: tuple, y: tuple):
    if not x:
        return Fraction(1), y
    if not y:
        return Fraction(1), x
    acc = dict(x)
    for k, v in y:
        acc[k] = acc.get(k, 0) + v
    return _norm_params(acc)


def _mul_key(k1, k2):
    sign, atoms = _merge_atoms(k1[1], k2[1])
    if sign == 0:
        return 0, None
    factor, params = _merge_params(k1[3], k2[3])
    key = (k1[0] + k2[0], atoms, _merge_lin(k1[2], k2[2]), params)
    return (sign * factor), key


# --------------------------------------------------------------------------- expressions


class SymExpr:
    """Immutable sum of monomials; see module docstring for the key layout."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        self.terms = terms if terms is not None else {}
        self._hash = None

    # ---- constructors
    @classmethod
    def const(cls, c) -> SymExpr:
        q = Q.coerce(c)
        return cls({(0, (), (), ()): q}) if q else cls()

    @classmethod
    def atom(cls, a: Atom) -> SymExpr:
        return cls({(0, (a,), (), ()): ONE_Q})

    @classmethod
    def lam(cls, k: int = 1) -> SymExpr:
        return cls({(k, (), (), ()): ONE_Q})

    @classmethod
    def param(cls, name: str, exponent=1) -> SymExpr:
        if name not in PARAM_ORDER:
            raise ValueError(f"unknown parameter {name!r}")
        factor, params = _norm_params({name: Fraction(exponent)})
        return cls({(0, (), (), params): Q(factor)})

    @classmethod
    def expi(cls, a: Atom, c=1) -> SymExpr:
        """``exp(i * c * a)`` for a scalar (even, underived) atom."""
        c = Fraction(c)
        if c == 0:
            return cls.const(1)
        return cls({(0, (), ((a, c),), ()): ONE_Q})

    @classmethod
    def from_terms(cls, raw: Iterable) -> SymExpr:
        """Build from raw ``(coef, lam, atoms, exps, params)`` entries in any order."""
        out: dict = {}
        for coef, lam, atoms, exps, params in raw:
            q = Q.coerce(coef)
            sign, srt = _sort_atoms(atoms)
            if sign == 0 or not q:
                continue
            acc: dict = {}
            for k, v in exps:
                acc[k] = acc.get(k, 0) + Fraction(v)
            ex = tuple(sorted((k, v) for k, v in acc.items() if v != 0))
            pacc: dict = {}
            for k, v in params:
                pacc[k] = pacc.get(k, 0) + Fraction(v)
            factor, par = _norm_params(pacc)
            key = (int(lam), srt, ex, par)
            _acc(out, key, q * Q(sign * factor))
        return cls(out)

    # ---- basic protocol
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, SymExpr):
            try:
                other = as_expr(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __len__(self):
        return len(self.terms)

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, v in other.terms.items():
            _acc(out, k, v)
        return SymExpr(out)

    __radd__ = __add__

    def __neg__(self):
        return SymExpr({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, complex, Q)):
            q = Q.coerce(other)
            if not q:
                return SymExpr()
            return SymExpr({k: v * q for k, v in self.terms.items()})
        other = _coerce(other)
        if other is None:
            return NotImplemented
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                s, key = _mul_key(k1, k2)
                if not s:
                    continue
                _acc(out, key, v1 * v2 * Q(s))
        return SymExpr(out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, complex, Q)):
            return self * other
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other * self

    def inverse(self) -> SymExpr:
        """Inverse of a single atom-free monomial (scalar, params, exps, lambda)."""
        if len(self.terms) != 1:
            raise NotInvertible(f"cannot invert multi-term expression {self}")
        (key, c), = self.terms.items()
        lam, atoms, exps, params = key
        if atoms:
            raise NotInvertible(f"cannot invert field monomial {self}")
        factor, par = _norm_params({k: -v for k, v in params})
        inv_key = (-lam, (), tuple((a, -v) for a, v in exps), par)
        return SymExpr({inv_key: (ONE_Q / c) * Q(factor)})

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, complex, Q)):
            return self * (ONE_Q / Q.coerce(other))
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = SymExpr.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # ---- structure queries
    def lam_powers(self) -> list[int]:
        return sorted({k[0] for k in self.terms})

    def atoms(self) -> set[Atom]:
        out = set()
        for k in self.terms:
            out.update(k[1])
        return out

    def exp_atoms(self) -> set[Atom]:
        out = set()
        for k in self.terms:
            out.update(a for a, _ in k[2])
        return out

    def parity(self) -> int | None:
        """0 even, 1 odd, None mixed (zero counts as even)."""
        ps = {sum(a.odd for a in k[1]) & 1 for k in self.terms}
        if not ps:
            return 0
        return ps.pop() if len(ps) == 1 else None

    def is_scalar_monomial(self) -> bool:
        if len(self.terms) != 1:
            return False
        (key,) = self.terms
        return not key[1]

    def map_terms(self, fn: Callable) -> SymExpr:
        out: dict = {}
        for key, c in self.terms.items():
            r = fn(key, c)
            if r is None:
                continue
            nk, nc = r
            _acc(out, nk, nc)
        return SymExpr(out)

    def conj_map(self) -> SymExpr:
        """Formal conjugation: dagger swap, i -> -i, reversal of atom order."""
        raw = []
        for (lam, atoms, exps, params), c in self.terms.items():
            flipped = [a._replace(dagger=not a.dagger) if a.kind != "alpha" else a for a in reversed(atoms)]
            raw.append((c.conj(), lam, flipped, [(a, -v) for a, v in exps], params))
        return SymExpr.from_terms(raw)

    # ---- printing
    def __repr__(self):
        return f"SymExpr({self.text()})"

    def __str__(self):
        return self.text()

    def text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms, key=_key_order):
            c = self.terms[key]
            lam, atoms, exps, params = key
            bits = []
            if lam:
                bits.append(f"L^{lam}")
            for name, e in params:
                bits.append(f"{name}^{e}" if e != 1 else name)
            for a, v in exps:
                bits.append(f"e^(i{v}*{a.text()})")
            bits.extend(a.text() for a in atoms)
            parts.append(f"{c!r}*" + "*".join(bits) if bits else repr(c))
        return " + ".join(parts).replace("+ - ", "- ")

    def latex(self) -> str:
        return to_latex(self)

    def to_json(self) -> dict:
        return to_json(self)


def _key_order(key):
    lam, atoms, exps, params = key
    return (-lam, len(atoms), atoms, exps, params)


def _acc(out: dict, key, q: Q) -> None:
    prev = out.get(key)
    if prev is None:
        if q:
            out[key] = q
        return
    s = prev + q
    if s:
        out[key] = s
    else:
        del out[key]


def _coerce(x) -> SymExpr | None:
    if isinstance(x, SymExpr):
        return x
    if isinstance(x, (int, Fraction, complex, Q)):
        return SymExpr.const(x)
    return None


def as_expr(x) -> SymExpr:
    e = _coerce(x)
    if e is None:
        raise TypeError(f"cannot convert {type(x).__name__} to SymExpr")
    return e


ZERO = SymExpr()
ONE = SymExpr.const(1)
I = SymExpr.const(I_Q)
LAM = SymExpr.lam(1)


def param(name: str, exponent=1) -> SymExpr:
    return SymExpr.param(name, exponent)


def sym(name: str, dagger=False, tilde=False, odd=False, kind="field", dx=0, dt=0) -> SymExpr:
    return SymExpr.atom(Atom(name, dagger, dx, dt, tilde, odd, kind))


def expi(a: Atom, c=1) -> SymExpr:
    return SymExpr.expi(a, c)


# --------------------------------------------------------------------------- normal form & coefficients


def normalize(e: SymExpr) -> SymExpr:
    """Re-canonicalize every monomial; idempotent on already-built expressions."""
    raw = [(c, lam, atoms, exps, params) for (lam, atoms, exps, params), c in e.terms.items()]
    return SymExpr.from_terms(raw)


def laurent_coeff(e: SymExpr, k: int) -> SymExpr:
    return SymExpr({(0,) + key[1:]: c for key, c in e.terms.items() if key[0] == k})


def laurent_split(e: SymExpr) -> dict[int, SymExpr]:
    out: dict[int, dict] = {}
    for key, c in e.terms.items():
        out.setdefault(key[0], {})[(0,) + key[1:]] = c
    return {k: SymExpr(v) for k, v in sorted(out.items())}


def flip_lambda(e: SymExpr) -> SymExpr:
    """Substitute lambda -> 1/lambda."""
    return SymExpr({(-key[0],) + key[1:]: c for key, c in e.terms.items()})


def times_lam(e: SymExpr, k: int) -> SymExpr:
    return SymExpr({(key[0] + k,) + key[1:]: c for key, c in e.terms.items()})


# --------------------------------------------------------------------------- derivations


def derive(e: SymExpr, atom_rule: Callable[[Atom], SymExpr]) -> SymExpr:
    """Apply the even derivation defined on atoms by ``atom_rule`` (Leibniz, chain rule on exps)."""
    cache: dict = {}

    def rule(a):
        r = cache.get(a)
        if r is None:
            r = atom_rule(a)
            cache[a] = r
        return r

    out = SymExpr()
    pieces: list[SymExpr] = []
    for key, c in e.terms.items():
        lam, atoms, exps, params = key
        scalar = SymExpr({(lam, (), exps, params): c})
        for p, a in enumerate(atoms):
            d = rule(a)
            if not d.terms:
                continue
            left = SymExpr({(0, atoms[:p], (), ()): ONE_Q})
            right = SymExpr({(0, atoms[p + 1 :], (), ()): ONE_Q})
            pieces.append(scalar * left * d * right)
        if exps:
            dsum = SymExpr()
            for a, v in exps:
                dsum = dsum + rule(a) * Q(0, v)
            if dsum.terms:
                pieces.append(SymExpr({key: c}) * dsum)
    for p in pieces:
        out = out + p
    return out


def _default_rule(direction: str, rules: dict | None):
    def rule(a: Atom) -> SymExpr:
        if rules is not None:
            r = rules.get(a)
            if r is not None:
                return r
        if a.kind in ("field", "alpha"):
            return SymExpr.atom(a.raise_x() if direction == "x" else a.raise_t())
        raise UnresolvedSymbol(f"no d{direction} rule for {a.text()}")

    return rule


def d_x(e: SymExpr, rules: dict | None = None) -> SymExpr:
    """x-derivative; field atoms get their order raised, ``rules`` resolve other atoms."""
    return derive(e, _default_rule("x", rules))


def d_t_formal(e: SymExpr, rules: dict | None = None) -> SymExpr:
    """Formal t-derivative: field atoms are tagged with a raised ``dt``."""
    return derive(e, _default_rule("t", rules))


def substitute(e: SymExpr, fn: Callable[[Atom], SymExpr | None]) -> SymExpr:
    """Replace polynomial atoms by expressions (order-preserving)."""
    cache: dict = {}

    def image(a):
        if a in cache:
            return cache[a]
        r = fn(a)
        cache[a] = r
        return r

    out: dict = {}
    for key, c in e.terms.items():
        lam, atoms, exps, params = key
        imgs = [image(a) for a in atoms]
        if all(im is None for im in imgs):
            _acc(out, key, c)
            continue
        acc = SymExpr({(lam, (), exps, params): c})
        run: list = []
        for a, im in zip(atoms, imgs):
            if im is None:
                run.append(a)
                continue
            if run:
                acc = acc * SymExpr({(0, tuple(run), (), ()): ONE_Q})
                run = []
            acc = acc * im
            if not acc.terms:
                break
        if run and acc.terms:
            acc = acc * SymExpr({(0, tuple(run), (), ()): ONE_Q})
        for k2, v2 in acc.terms.items():
            _acc(out, k2, v2)
    return SymExpr(out)


def substitute_fixpoint(e: SymExpr, fn, budget: int = 64) -> SymExpr:
    """Apply ``substitute`` until no atom is rewritten; raise after ``budget`` passes."""
    for _ in range(budget):
        if not any(fn(a) is not None for a in e.atoms()):
            return e
        e = substitute(e, fn)
    raise RuntimeError(f"rewriting did not terminate within {budget} passes; partial form: {e}")


def exp_nilpotent(e: SymExpr, limit: int = 32) -> SymExpr:
    """exp of an even, atom-nilpotent expression with no constant part (series terminates)."""
    if any(not key[1] for key in e.terms):
        raise ValueError("exp_nilpotent needs every monomial to contain field atoms")
    result = ONE
    power = ONE
    fact = 1
    for k in range(1, limit):
        power = power * e
        if not power.terms:
            return result
        fact *= k
        result = result + power * Fraction(1, fact)
    raise RuntimeError("exponential series did not terminate")


def sqrt_monomial(e: SymExpr) -> SymExpr:
    """Principal square root of a scalar monomial (sqrt(-1) = i)."""
    if not e.is_scalar_monomial():
        raise NotInvertible(f"square root needs a field-free monomial, got {e}")
    (key, c), = e.terms.items()
    lam, _, exps, params = key
    if lam % 2:
        raise NotInvertible("odd lambda power has no monomial square root")
    if c.im:
        raise NotInvertible(f"no exact square root for coefficient {c!r}")
    root = _sqrt_fraction(abs(c.re))
    q = Q(root) if c.re > 0 else Q(0, root)
    factor, par = _norm_params({k: v / 2 for k, v in params})
    return SymExpr({(lam // 2, (), tuple((a, v / 2) for a, v in exps), par): q * Q(factor)})


def _sqrt_fraction(f: Fraction) -> Fraction:
    from math import isqrt

    n, d = f.numerator, f.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn != n or rd * rd != d:
        raise NotInvertible(f"{f} is not a rational square")
    return Fraction(rn, rd)


# --------------------------------------------------------------------------- alpha rewriting


def rewrite_alpha(e: SymExpr, model) -> SymExpr:
    """Normalize alpha exponentials.

    BT: powers of w = e^{i alpha} are reduced into the window w^-2..w^1 using
    w^2 - w^-2 = 2 i s, s = (g a / 2 m) X+ X (the quartic w^4 - 2 i s w^2 - 1 = 0).
    GT: the alpha exponentials are already expanded by nilpotency when the model is
    built, so only ``exp_nilpotent`` is relevant there and this is the identity.
    """
    if getattr(model, "name", model) != "BT":
        return e
    alpha = Atom("alpha", kind="alpha")
    s = (
        param("g") * param("a") / param("m") * Fraction(1, 2)
        * SymExpr.atom(Atom("X", dagger=True, kind="boundary"))
        * SymExpr.atom(Atom("X", kind="boundary"))
    )
    two_is = s * Q(0, 2)
    result: dict = {}
    pending = [(k, c) for k, c in e.terms.items()]
    while pending:
        nxt: list = []
        for key, c in pending:
            lam, atoms, exps, params = key
            n = dict(exps).get(alpha, Fraction(0))
            if n.denominator != 1 or -2 <= n <= 1:
                _acc(result, key, c)
                continue
            n = int(n)
            rest = tuple((a, v) for a, v in exps if a != alpha)
            mono = lambda p: SymExpr({(lam, atoms, _merge_lin(rest, ((alpha, Fraction(p)),)), params): c})
            if n >= 2:
                expanded = two_is * mono(n - 2) + mono(n - 4)
            else:
                expanded = mono(n + 4) - two_is * mono(n + 2)
            nxt.extend(expanded.terms.items())
        pending = nxt
    return SymExpr(result)


# --------------------------------------------------------------------------- numeric evaluation


def evaluate(e: SymExpr, values: dict, params: dict, one=1.0):
    """Evaluate to a Laurent dict ``{lam: value}``.

    ``values`` maps atoms to numbers or ring elements supporting ``*`` and ``+``;
    exponential atoms must map to complex numbers.  ``one`` is the ring unit.
    """
    out: dict = {}
    pcache: dict = {}
    for (lam, atoms, exps, pars), c in e.terms.items():
        val = complex(c)
        for name, ex in pars:
            key = (name, ex)
            if key not in pcache:
                base = 2.0 if name == "2" else float(params[name])
                pcache[key] = base ** float(ex)
            val *= pcache[key]
        if exps:
            phase = 0j
            for a, v in exps:
                if a not in values:
                    raise UnresolvedSymbol(f"no value for {a.text()}")
                phase = phase + values[a] * float(v)
            if isinstance(phase, np.ndarray):
                val = val * np.exp(1j * phase)
            else:
                val *= cmath.exp(1j * phase)
        term = one * val
        for a in atoms:
            if a not in values:
                raise UnresolvedSymbol(f"no value for {a.text()}")
            term = term * values[a]
        if lam in out:
            out[lam] = out[lam] + term
        else:
            out[lam] = term
    return out


# --------------------------------------------------------------------------- serialization


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def to_json(e: SymExpr) -> dict:
    terms = []
    for key in sorted(e.terms, key=_json_order):
        lam, atoms, exps, params = key
        c = e.terms[key]
        terms.append(
            {
                "coeff": [_frac_str(c.re), _frac_str(c.im)],
                "lam": lam,
                "atoms": [a.to_json() for a in atoms],
                "exps": [[a.to_json(), _frac_str(v)] for a, v in exps],
                "params": [[n, _frac_str(v)] for n, v in params],
            }
        )
    return {"terms": terms}


def _json_order(key):
    lam, atoms, exps, params = key
    return (lam, [a.to_json() for a in atoms].__repr__(), repr(exps), repr(params))


def from_json(data: dict) -> SymExpr:
    raw = []
    for t in data["terms"]:
        re, im = (Fraction(x) for x in t["coeff"])
        raw.append(
            (
                Q(re, im),
                t["lam"],
                [Atom.from_json(a) for a in t["atoms"]],
                [(Atom.from_json(a), Fraction(v)) for a, v in t["exps"]],
                [(n, Fraction(v)) for n, v in t["params"]],
            )
        )
    return SymExpr.from_terms(raw)


def dumps(e: SymExpr) -> str:
    return json.dumps(to_json(e), sort_keys=True)


_PARAM_TEX = {"m": "m", "g": "g", "a": "a", "sigma": r"\sigma", "2": "2"}


def _coeff_latex(c: Q) -> tuple[str, bool]:
    """Return (text, is_one) for a coefficient, without leading sign handling."""

    def frac(f: Fraction) -> str:
        return str(f.numerator) if f.denominator == 1 else rf"\frac{{{f.numerator}}}{{{f.denominator}}}"

    if not c.im:
        return frac(c.re), c.re == 1
    if not c.re:
        if c.im == 1:
            return "i", False
        return frac(c.im) + "i", False
    return f"({frac(c.re)}{'+' if c.im > 0 else '-'}{frac(abs(c.im))}i)", False


def to_latex(e: SymExpr) -> str:
    if not e.terms:
        return "0"
    parts = []
    for key in sorted(e.terms, key=_key_order):
        lam, atoms, exps, params = key
        c = e.terms[key]
        neg = (c.im == 0 and c.re < 0) or (c.re == 0 and c.im < 0)
        cc = -c if neg else c
        ctext, is_one = _coeff_latex(cc)
        factors = []
        if lam:
            factors.append(rf"\lambda^{{{lam}}}")
        for name, v in params:
            base = _PARAM_TEX[name]
            if v == Fraction(1, 2):
                factors.append(rf"\sqrt{{{base}}}")
            elif v == 1:
                factors.append(base)
            else:
                factors.append(rf"{base}^{{{_tex_frac(v)}}}")
        if exps:
            inner = " + ".join(rf"{_tex_frac(v)}\,{atom_latex(a)}" for a, v in exps)
            factors.append(rf"e^{{i({inner})}}")
        factors.extend(atom_latex(a) for a in atoms)
        body = " ".join(factors)
        if not body:
            term = ctext
        elif is_one:
            term = body
        else:
            term = f"{ctext}\\,{body}"
        parts.append(("- " if neg else "+ ") + term)
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def trig_latex(e: SymExpr) -> str:
    """LaTeX with conjugate exponential pairs folded into cos/sin.

    ``c e^{i u} + c e^{-i u}`` prints as ``2c cos u`` and ``c e^{i u} - c e^{-i u}``
    as ``2ic sin u``; unpaired terms print as exponentials.
    """
    if not e.terms:
        return "0"
    done, parts = set(), []
    rest = SymExpr()
    for key in sorted(e.terms, key=_key_order):
        if key in done:
            continue
        lam, atoms, exps, params = key
        partner = (lam, atoms, tuple((a, -v) for a, v in exps), params)
        c = e.terms[key]
        if not exps or exps[0][1] < 0 or partner not in e.terms:
            if partner not in e.terms or not exps:
                rest = rest + SymExpr({key: c})
                done.add(key)
            continue
        c2 = e.terms[partner]
        if c2 == c:
            fn, k = r"\cos", c * Q(2)
        elif c2 == -c:
            fn, k = r"\sin", c * Q(0, 2)
        else:
            continue
        done.update((key, partner))
        arg = " + ".join(rf"{_tex_frac(v)}\,{atom_latex(a)}" for a, v in exps).replace("+ -", "- ")
        body = SymExpr({(lam, atoms, (), params): k}).latex()
        parts.append(rf"\left({body}\right){fn}\left({arg}\right)")
    for key in e.terms:
        if key not in done:
            rest = rest + SymExpr({key: e.terms[key]})
    if rest.terms:
        parts.append(rest.latex())
    return " + ".join(parts).replace("+ - ", "- ")


def _tex_frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else rf"{v.numerator}/{v.denominator}"
