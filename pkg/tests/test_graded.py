import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defect_charges.graded import (
    DimensionError,
    GradedElement,
    ParityError,
    gr_exp,
    koszul_sign,
    random_even,
    random_odd,
)

N = 6
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rng(seed):
    return np.random.default_rng(seed)


def test_generators_anticommute():
    e1, e2 = GradedElement.generator(0, N), GradedElement.generator(1, N)
    assert (e1 * e2 + e2 * e1).max_abs() == 0
    assert (e1 * e1).max_abs() == 0
    assert (e1 * e2).coefficients == {0b11: 1}
    assert (e2 * e1).coefficients == {0b11: -1}


def test_koszul_sign_counts_inversions():
    assert koszul_sign(0b10, 0b01) == -1
    assert koszul_sign(0b01, 0b10) == 1
    assert koszul_sign(0b110, 0b001) == 1


def test_dimension_checks():
    with pytest.raises(DimensionError):
        GradedElement.generator(N, N)
    with pytest.raises(DimensionError):
        GradedElement(4) + GradedElement(5)
    with pytest.raises(DimensionError):
        GradedElement(99)


def test_parity():
    r = rng(1)
    assert random_odd(r, N).parity() == 1
    assert random_even(r, N).parity() == 0
    mixed = random_odd(r, N) + random_even(r, N)
    assert mixed.parity() is None


def test_exp_of_nilpotent_even():
    a = GradedElement.generator(0, N) * GradedElement.generator(1, N)
    e = gr_exp(a)
    assert e.allclose(GradedElement.scalar(1, N) + a)
    with pytest.raises(ParityError):
        gr_exp(GradedElement.generator(0, N))
    with pytest.raises(ValueError):
        gr_exp(GradedElement.scalar(1.0, N))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_associative(seed):
    r = rng(seed)
    a, b, c = (random_odd(r, N) + random_even(r, N) for _ in range(3))
    assert ((a * b) * c).allclose(a * (b * c), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_graded_commutativity(seed):
    r = rng(seed)
    x, y = random_odd(r, N), random_odd(r, N)
    u, v = random_even(r, N), random_odd(r, N)
    assert (x * y).allclose(-(y * x), atol=1e-12)
    assert (u * v).allclose(v * u, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_odd_squares_vanish(seed):
    x = random_odd(rng(seed), N)
    assert (x * x).max_abs() < 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_exp_homomorphism_on_commuting_nilpotents(seed):
    r = rng(seed)
    a = random_odd(r, N) * random_odd(r, N)
    b = random_odd(r, N) * random_odd(r, N)
    assert gr_exp(a + b).allclose(gr_exp(a) * gr_exp(b), atol=1e-10)
