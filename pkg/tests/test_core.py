"""Exact arithmetic, multi-indices, polynomial symbols and the file format."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taucalc import multiindex as mi
from taucalc.exact import QI, coeff_from_parts, coeff_parts, minus_i_power, parse_tau, to_coeff
from taucalc.io import SymbolFormatError, dumps_symbol, load_symbol, loads_symbol, save_symbol
from taucalc.suite import random_poly
from taucalc.symbols import PolyAmplitude, PolySymbol, RationalSymbol, SymbolError

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
qis = st.builds(QI, fractions, fractions)
indices = st.lists(st.integers(0, 5), min_size=1, max_size=3).map(tuple)


@given(qis, qis, qis)
def test_qi_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    if b:
        assert (a / b) * b == a
    assert complex(a * b) == pytest.approx(complex(a) * complex(b))


def test_minus_i_powers_cycle():
    for n in range(12):
        assert complex(minus_i_power(n)) == pytest.approx((-1j) ** n)


@pytest.mark.parametrize("text,expected", [("1/3", Fraction(1, 3)), ("0.5", Fraction(1, 2)), ("-2", Fraction(-2))])
def test_parse_tau_keeps_decimal_strings_exact(text, expected):
    assert parse_tau(text) == expected
    assert isinstance(parse_tau(0.25), float)
    with pytest.raises(ValueError):
        parse_tau("one half")
    with pytest.raises(TypeError):
        parse_tau(True)


@given(qis)
def test_coefficient_parts_round_trip(c):
    assert coeff_from_parts(*coeff_parts(c)) == c


def test_float_coefficient_parts_are_bit_exact():
    c = complex(0.1, -1e-300)
    back = coeff_from_parts(*coeff_parts(c))
    assert back == c and isinstance(back, complex)
    assert to_coeff(0.5) == QI(Fraction(1, 2))


# multi-indices -------------------------------------------------------------

@given(indices)
def test_binomial_row_sums_to_power_of_two(a):
    assert sum(mi.binomial(a, b) for b in mi.box(a)) == 2 ** mi.norm(a)


@given(st.integers(0, 6), st.integers(1, 3))
def test_of_norm_counts(n, d):
    got = list(mi.of_norm(n, d))
    assert len(got) == math.comb(n + d - 1, d - 1) == len(set(got))
    assert all(mi.norm(a) == n for a in got)


def test_multiindex_arithmetic():
    assert mi.factorial((3, 2)) == 12
    assert mi.falling((5,), (2,)) == 20
    assert mi.multinomial([(1, 0), (1, 2)]) == 2  # (2,2)!/((1,0)! (1,2)!)
    assert mi.sub((3, 1), (1, 1)) == (2, 0)
    with pytest.raises(mi.MultiIndexError):
        mi.sub((1,), (2,))


# polynomial symbols ----------------------------------------------------------

def test_symbol_algebra_and_evaluation():
    x, xi = PolySymbol.x(1), PolySymbol.xi(1)
    p = (x + xi) ** 2
    assert p == x * x + 2 * x * xi + xi * xi
    pts = np.linspace(-2, 2, 7)
    assert np.allclose(p.evaluate(pts, pts[::-1]), (pts + pts[::-1]) ** 2)
    assert p.evaluate_exact([Fraction(1, 2)], [Fraction(1, 3)]) == QI(Fraction(25, 36))
    assert p.degree == 2 and p.constant_term() == 0


def test_derivatives_partial_and_D():
    x, xi = PolySymbol.x(1), PolySymbol.xi(1)
    p = x ** 3 * xi ** 2
    assert p.derive(dx=(1,)) == 3 * x ** 2 * xi ** 2
    assert p.derive(dxi=(2,), kind="D") == -2 * x ** 3
    assert p.derive(dx=(4,)).is_zero()
    with pytest.raises(SymbolError):
        p.derive(dx=(1,), kind="total")


def test_rational_symbol_derivative_matches_finite_difference():
    base = 1 + PolySymbol.x(1) ** 2 + PolySymbol.xi(1) ** 2
    r = RationalSymbol.inverse(base).derive(dx=(1,))
    h = 1e-6
    x0, xi0 = 0.7, -0.3
    fd = (1 / base.evaluate(x0 + h, xi0) - 1 / base.evaluate(x0 - h, xi0)) / (2 * h)
    assert complex(r.evaluate(x0, xi0)) == pytest.approx(complex(fd), rel=1e-8)


def test_amplitude_restricts_to_diagonal():
    amp = PolyAmplitude(1, {((1,), (1,), (0,)): QI(1), ((0,), (0,), (2,)): QI(3)})
    assert amp.restrict_diagonal() == PolySymbol.x(1) ** 2 + 3 * PolySymbol.xi(1) ** 2


# file format -------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3), st.integers(0, 5))
def test_file_round_trip_is_exact(seed, d, deg):
    a = random_poly(np.random.default_rng(seed), d, deg)
    assert loads_symbol(dumps_symbol(a)) == a


def test_file_round_trip_other_representations(tmp_path):
    base = 1 + PolySymbol.x(1) ** 2
    r = RationalSymbol(PolySymbol.xi(1), base, 3)
    float_sym = PolySymbol(1, {((1,), (0,)): complex(0.1, 0.2)})
    amp = PolyAmplitude(1, {((1,), (2,), (0,)): QI(1, 1)})
    for s in (r, float_sym, amp):
        path = tmp_path / "s.json"
        save_symbol(s, path)
        back = load_symbol(path)
        assert dumps_symbol(back) == dumps_symbol(s)


def test_file_errors_name_line_and_problem(tmp_path):
    text = dumps_symbol(PolySymbol.x(1) + PolySymbol.xi(1)).replace('"x": [1]', '"x": [1, 0]')
    with pytest.raises(SymbolFormatError, match=r"f.json:\d+: multi-index 'x' must be a list of length 1"):
        loads_symbol(text, "f.json")
    with pytest.raises(SymbolFormatError, match="representation"):
        loads_symbol('{"dim": 1, "representation": "spline"}')
    with pytest.raises(SymbolFormatError, match="nope.json"):
        load_symbol(tmp_path / "nope.json")
