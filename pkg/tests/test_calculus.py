"""Quantization change, composition and transpose formulas against independent routes."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taucalc.calculus import (ConventionError, QuantizedSymbol, change_quantization, combinatorial_identity_check,
                              compose_general, compose_tau, transpose_symbol, weyl_compose)
from taucalc.exact import I
from taucalc.hermite import quantize_to_operator
from taucalc.suite import TAUS, random_poly
from taucalc.symbols import PolySymbol, SymbolError

HALF = Fraction(1, 2)
taus = st.sampled_from(TAUS)
seeds = st.integers(0, 2 ** 32 - 1)
x, xi = PolySymbol.x(1), PolySymbol.xi(1)


def poly(seed, d=1, deg=3, n=5):
    return random_poly(np.random.default_rng(seed), d, deg, n)


def test_weyl_symbol_of_x_xi():
    assert change_quantization(x * xi, 0, HALF) == x * xi + PolySymbol.constant(1, I * HALF)
    assert change_quantization(x * xi, 0, 1) == x * xi + PolySymbol.constant(1, I)


@settings(max_examples=30, deadline=None)
@given(seeds, taus, taus)
def test_quantization_change_agrees_with_operator_normal_ordering(seed, t1, t2):
    a = poly(seed, d=int(seed % 2) + 1)
    assert quantize_to_operator(change_quantization(a, t1, t2), t2) == quantize_to_operator(a, t1)


@settings(max_examples=30, deadline=None)
@given(seeds, taus)
def test_left_composition_is_operator_product(seed, t):
    a, b = poly(seed), poly(seed + 1)
    A, B = quantize_to_operator(a, t), quantize_to_operator(b, t)
    assert quantize_to_operator(compose_tau(a, b, t), t) == A @ B


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_weyl_composition_matches_tau_half(seed):
    a, b = poly(seed, 2, 3, 4), poly(seed + 7, 2, 3, 4)
    assert weyl_compose(a, b) == compose_tau(a, b, HALF)


@settings(max_examples=20, deadline=None)
@given(seeds, taus, taus, taus)
def test_general_composition_two_routes(seed, t1, t2, t):
    a, b = poly(seed), poly(seed + 3)
    direct = compose_general(a, t1, b, t2, t)
    via = compose_tau(change_quantization(a, t1, t), change_quantization(b, t2, t), t)
    assert direct == via


@settings(max_examples=20, deadline=None)
@given(seeds, taus)
def test_transpose_matches_operator_transpose_at_tau_zero_route(seed, t):
    # transposing at tau equals reflecting and changing to 1 - tau
    a = poly(seed)
    assert transpose_symbol(a, t) == change_quantization(a.reflect_xi(), 1 - t, t)


def test_transpose_of_derivative_is_minus_derivative():
    assert transpose_symbol(xi, 0) == -xi
    assert transpose_symbol(x, Fraction(1, 3)) == x


def test_max_order_truncation_keeps_low_orders():
    a, b = x ** 3 * xi, x * xi ** 3
    full = compose_tau(a, b, 0)
    assert compose_tau(a, b, 0, max_order=0) == a * b
    assert compose_tau(a, b, 0, max_order=10) == full


def test_two_pi_convention_scales_by_two_pi():
    a, b = x * xi, xi ** 2
    assert compose_tau(a, b, 0, convention="two_pi").allclose(compose_tau(a, b, 0).scale(2 * math.pi), 1e-12)
    with pytest.raises(ConventionError):
        compose_tau(a, b, 0, convention="physics")
    with pytest.raises(ConventionError):
        QuantizedSymbol(a, 0) @ QuantizedSymbol(b, 0, "two_pi")


def test_quantized_symbol_wrapper():
    A = QuantizedSymbol(x * xi, 0)
    B = QuantizedSymbol(xi, HALF)
    assert A.to_tau(HALF).symbol == change_quantization(x * xi, 0, HALF)
    assert A.compose(B, target=1).symbol == compose_general(x * xi, 0, xi, HALF, 1)
    assert A.transpose().transpose().symbol == A.symbol


def test_dimension_mismatch_rejected():
    with pytest.raises(SymbolError):
        compose_tau(x, PolySymbol.x(2), 0)


def test_combinatorial_identities_small():
    rep = combinatorial_identity_check(6, 2, 4)
    assert rep.passed
    assert rep.values["vandermonde_cases"] > 0 and rep.values["four_factorial_cases"] > 0
