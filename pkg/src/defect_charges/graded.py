"""Finite Grassmann algebra with complex coefficients.

Elements are stored densely: ``coef[S]`` is the coefficient of the ordered
monomial ``g_{s1} g_{s2} ...`` whose generator set is the bitmask ``S``.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

DEFAULT_GENERATORS = 8
MAX_GENERATORS = 12


class DimensionError(ValueError):
    pass


class ParityError(ValueError):
    pass


def _popcount(n: int) -> int:
    return bin(n).count("1")


def koszul_sign(s: int, t: int) -> int:
    """Sign of ``g_S g_T = sign * g_{S|T}`` for disjoint bitmasks."""
    if s & t:
        return 0
    swaps = 0
    for bit in range(t.bit_length()):
        if t >> bit & 1:
            swaps += _popcount(s >> (bit + 1))
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def _product_table(n: int):
    left, right, out, sign = [], [], [], []
    size = 1 << n
    for s in range(size):
        for t in range(size):
            if s & t:
                continue
            left.append(s)
            right.append(t)
            out.append(s | t)
            sign.append(koszul_sign(s, t))
    return (np.array(left), np.array(right), np.array(out), np.array(sign, dtype=float))


@lru_cache(maxsize=None)
def _grades(n: int) -> np.ndarray:
    return np.array([_popcount(k) for k in range(1 << n)])


class GradedElement:
    """Element of the Grassmann algebra on ``num_generators`` generators."""

    __slots__ = ("num_generators", "coef")

    def __init__(self, num_generators: int, coef=None):
        if not 0 <= num_generators <= MAX_GENERATORS:
            raise DimensionError(f"num_generators must be in [0, {MAX_GENERATORS}]")
        self.num_generators = num_generators
        size = 1 << num_generators
        if coef is None:
            self.coef = np.zeros(size, dtype=complex)
        else:
            arr = np.asarray(coef, dtype=complex)
            if arr.shape != (size,):
                raise DimensionError(f"expected {size} coefficients, got {arr.shape}")
            self.coef = arr

    # construction helpers
    @classmethod
    def scalar(cls, value: complex, n: int = DEFAULT_GENERATORS) -> GradedElement:
        e = cls(n)
        e.coef[0] = value
        return e

    @classmethod
    def generator(cls, i: int, n: int = DEFAULT_GENERATORS) -> GradedElement:
        """The generator ``g_{i+1}`` (zero-based index)."""
        if not 0 <= i < n:
            raise DimensionError(f"generator index {i} out of range for N={n}")
        e = cls(n)
        e.coef[1 << i] = 1.0
        return e

    @classmethod
    def from_map(cls, n: int, mapping: dict[int, complex]) -> GradedElement:
        e = cls(n)
        for mask, value in mapping.items():
            if mask >> n:
                raise DimensionError(f"bitmask {mask:#b} uses generators beyond N={n}")
            e.coef[mask] += value
        return e

    @property
    def coefficients(self) -> dict[int, complex]:
        return {int(k): complex(self.coef[k]) for k in np.flatnonzero(self.coef)}

    @property
    def body(self) -> complex:
        return complex(self.coef[0])

    def parity(self, tol: float = 0.0) -> int | None:
        """0 for even, 1 for odd, None for mixed. The zero element is even."""
        grades = _grades(self.num_generators)
        nz = np.abs(self.coef) > tol
        odd = bool(np.any(nz & (grades % 2 == 1)))
        even = bool(np.any(nz & (grades % 2 == 0)))
        if odd and even:
            return None
        return 1 if odd else 0

    def _check(self, other: GradedElement) -> None:
        if self.num_generators != other.num_generators:
            raise DimensionError(
                f"mismatched generator counts {self.num_generators} and {other.num_generators}"
            )

    def _coerce(self, other) -> GradedElement:
        if isinstance(other, GradedElement):
            self._check(other)
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return GradedElement.scalar(other, self.num_generators)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return GradedElement(self.num_generators, self.coef + other.coef)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return GradedElement(self.num_generators, self.coef - other.coef)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return GradedElement(self.num_generators, -self.coef)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return GradedElement(self.num_generators, self.coef * other)
        if not isinstance(other, GradedElement):
            return NotImplemented
        return gr_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return GradedElement(self.num_generators, self.coef * other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return GradedElement(self.num_generators, self.coef / other)
        return NotImplemented

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coef))) if self.coef.size else 0.0

    def allclose(self, other: GradedElement, atol: float = 1e-12) -> bool:
        other = self._coerce(other)
        return bool(np.max(np.abs(self.coef - other.coef)) <= atol)

    def __repr__(self) -> str:
        parts = []
        for mask, value in sorted(self.coefficients.items()):
            gens = "".join(f"g{i + 1}" for i in range(self.num_generators) if mask >> i & 1)
            parts.append(f"({value:.6g}){gens}" if gens else f"({value:.6g})")
        return " + ".join(parts) if parts else "0"


def gr_mul(a: GradedElement, b: GradedElement) -> GradedElement:
    """Associative product with the Koszul sign on generator interleaving."""
    a._check(b)
    n = a.num_generators
    left, right, out, sign = _product_table(n)
    terms = a.coef[left] * b.coef[right] * sign
    size = 1 << n
    coef = np.bincount(out, weights=terms.real, minlength=size) + 1j * np.bincount(
        out, weights=terms.imag, minlength=size
    )
    return GradedElement(n, coef)


def gr_exp(a: GradedElement) -> GradedElement:
    """Exponential of an even element with vanishing body; the series terminates."""
    if a.coef[0] != 0:
        raise ValueError("gr_exp needs zero body; split off the scalar part first")
    if a.parity() == 1 or a.parity() is None:
        raise ParityError("gr_exp is defined here only for even elements")
    n = a.num_generators
    result = GradedElement.scalar(1.0, n)
    power = GradedElement.scalar(1.0, n)
    for k in range(1, n // 2 + 1):
        power = gr_mul(power, a)
        if not np.any(power.coef):
            break
        result = result + power / factorial(k)
    return result


def random_element(
    rng: np.random.Generator,
    n: int = DEFAULT_GENERATORS,
    parity: int | None = None,
    body: bool = True,
    scale: float = 1.0,
) -> GradedElement:
    """Random element with Gaussian complex coefficients of the requested parity."""
    grades = _grades(n)
    coef = (rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)) * scale
    if parity is not None:
        coef[grades % 2 != parity] = 0
    if not body:
        coef[0] = 0
    return GradedElement(n, coef)


def random_odd(rng: np.random.Generator, n: int = DEFAULT_GENERATORS, scale: float = 1.0):
    return random_element(rng, n, parity=1, scale=scale)


def random_even(rng: np.random.Generator, n: int = DEFAULT_GENERATORS, scale: float = 1.0):
    return random_element(rng, n, parity=0, scale=scale)
