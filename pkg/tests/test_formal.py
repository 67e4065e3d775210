"""Closed-form symbols, class-constant fits, formal sums and amplitude reduction."""
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taucalc.calculus import change_quantization
from taucalc.exact import QI
from taucalc.expr import MAX_JET_ORDER, ExprParseError, ExprSymbol, jet_eval
from taucalc.formal import (FormalSum, GridSymbol, Region, amplitude_reduce, assemble_formal_sum,
                            estimate_class_constants, symbol_partials, verify_equivalence)
from taucalc.hermite import oracle_compare
from taucalc.suite import random_poly
from taucalc.symbols import PolyAmplitude, PolySymbol, SymbolError
from taucalc.weights import CutoffFamily, WeightFunction

G = WeightFunction.gevrey(0.5)
x, xi = PolySymbol.x(1), PolySymbol.xi(1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_jets_agree_with_polynomial_derivatives(seed):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, 1, 4, 5, complex_coeffs=False)
    text = " + ".join(f"({float(c.re)!r})*x^{a[0]}*xi^{b[0]}" for (a, b), c in p.terms.items())
    e = ExprSymbol(1, text)
    pts = rng.normal(size=(6, 1))
    table = jet_eval(e, pts, pts[::-1], 4)
    ref = symbol_partials(p, pts, pts[::-1], 4)
    for key, v in ref.items():
        assert np.allclose(table[key], v, rtol=1e-10, atol=1e-10)


def test_jets_match_mpmath_mixed_derivatives():
    e = ExprSymbol(1, "exp(x*xi)/(1+x^2) + sqrt(2+xi^2)*cos(x)")
    x0, xi0 = 0.4, -0.7
    f = lambda a, b: mpmath.exp(a * b) / (1 + a * a) + mpmath.sqrt(2 + b * b) * mpmath.cos(a)
    table = jet_eval(e, [[x0]], [[xi0]], 5)
    mpmath.mp.dps = 30
    for (al, be) in (((1,), (0,)), ((2,), (1,)), ((0,), (3,)), ((2,), (3,))):
        ref = complex(mpmath.diff(f, (x0, xi0), (al[0], be[0])))
        assert complex(table[(al, be)].ravel()[0]) == pytest.approx(ref, rel=1e-10)


def test_expr_derive_matches_jet_table():
    e = ExprSymbol(1, "log(1+x^2+xi^2)")
    d = e.derive(dx=(1,), dxi=(1,), kind="D")
    pt = ([[1.3]], [[0.2]])
    assert complex(d.evaluate(*pt).ravel()[0]) == pytest.approx(-complex(jet_eval(e, *pt, 2)[((1,), (1,))].ravel()[0]))


def test_expr_parse_errors():
    for bad in ("x +", "import os", "y*x", "tan(x)", "x % 2", "exp(x, xi)"):
        with pytest.raises(ExprParseError):
            ExprSymbol(1, bad)
    assert ExprSymbol(2, "x*eta - y*xi").dim == 2
    with pytest.raises(SymbolError):
        jet_eval(ExprSymbol(1, "x"), [[0.0]], [[0.0]], MAX_JET_ORDER + 1)


def test_grid_symbol_partials_by_spectral_differentiation():
    ax = np.linspace(-3, 3, 61)
    g = GridSymbol.sample(ExprSymbol(1, "exp(-(x^2+xi^2)/2)"), [ax, ax], K=2)
    X, XI = (v[..., 0] for v in g.points())
    table = g.partials(1)
    ref = -X * np.exp(-(X ** 2 + XI ** 2) / 2)
    assert np.max(np.abs(table[((1,), (0,))] - ref)) <= 1e-4


# class constants ---------------------------------------------------------------

def test_constant_symbol_has_unit_constants():
    rep = estimate_class_constants(PolySymbol.constant(1, 1), G, m=0.0, rho=1.0)
    assert rep.passed
    assert all(v["C"] == pytest.approx(1.0) for v in rep.values["fits"].values())


def test_polynomial_in_class_with_enough_growth():
    assert estimate_class_constants(x * xi, G, m=3.0, rho=1.0).passed


def test_gaussian_growth_is_outside_every_class():
    rep = estimate_class_constants(ExprSymbol(1, "exp(x^2)"), G, m=3.0, rho=1.0,
                                   region=Region(1.0, 20.0, include_core=True))
    assert not rep.passed and rep.values["diverges"]


# formal sums ---------------------------------------------------------------------

def test_formal_sum_validation():
    with pytest.raises(SymbolError):
        FormalSum([x], R=0.5)
    with pytest.raises(SymbolError):
        FormalSum([x], rho=0.0)
    with pytest.raises(SymbolError):
        FormalSum([])
    fs = FormalSum([x, xi, x * xi])
    assert fs.partial(2) == x + xi and fs.total() == x + xi + x * xi and fs[5] is None


def test_equivalence_of_formal_sums():
    one = FormalSum([PolySymbol.constant(1, 1)], weight=G)
    bump = FormalSum([ExprSymbol(1, "1 + (1+x^2+xi^2)^(-5)")], weight=G)
    slow = FormalSum([ExprSymbol(1, "1 + (1+x^2+xi^2)^(-2)")], weight=G)
    assert verify_equivalence(one, one).passed
    assert not verify_equivalence(one, FormalSum([PolySymbol.constant(1, 2)], weight=G)).passed
    assert verify_equivalence(one, bump, Nmax=10).passed
    assert not verify_equivalence(one, slow, Nmax=10).passed
    with pytest.raises(SymbolError):
        verify_equivalence(one, FormalSum([PolySymbol.constant(1, 1)], m=1.0, weight=G))


def test_assembled_symbol_equals_full_sum_far_out():
    fs = FormalSum([x, xi.scale(Fraction(1, 2)), PolySymbol.constant(1, 3)], R=2.0, weight=G)
    a = assemble_formal_sum(fs, CutoffFamily(R=2.0), G.conjugate())
    far = np.array([[1e6]]), np.array([[2e5]])
    assert complex(a.evaluate(*far).ravel()[0]) == pytest.approx(complex(fs.total().evaluate(*far).ravel()[0]))
    near = np.array([[0.5]]), np.array([[0.1]])
    assert complex(a.evaluate(*near).ravel()[0]) == pytest.approx(0.5)


def test_amplitude_reduction_examples():
    amp = PolyAmplitude(1, {((0,), (1,), (1,)): QI(1)})
    fs = amplitude_reduce(amp, 0)
    assert fs.total() == x * xi - PolySymbol.constant(1, QI(0, 1))
    assert amplitude_reduce(amp, 1).total() == x * xi
    assert oracle_compare("amplitude", amp, Fraction(1, 3)).passed
    diag = PolyAmplitude.from_symbol(x ** 2 * xi)
    # an x-only amplitude is a left symbol
    assert amplitude_reduce(diag, Fraction(1, 2)).total() == change_quantization(x ** 2 * xi, 0, Fraction(1, 2))
