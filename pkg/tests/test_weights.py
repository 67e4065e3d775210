"""Weight functions, Young conjugates and cutoff families."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taucalc.weights import (CutoffFamily, WeightError, WeightFunction, excision, gevrey_conjugate_closed_form,
                             japanese, smooth_step, tau_k, verify_conjugate_inequalities,
                             verify_amplitude_inequalities, verify_weight_axioms)

FAMILIES = [WeightFunction.gevrey(0.3), WeightFunction.gevrey(0.5), WeightFunction.gevrey(0.7),
            WeightFunction.logpower(2.0)]


@pytest.mark.parametrize("w", FAMILIES, ids=lambda w: w.spec)
def test_standard_weights_satisfy_axioms(w):
    rep = verify_weight_axioms(w)
    assert rep.passed, rep.failures
    assert rep.values["L_alpha_fit"] <= w.L + 1e-9


def test_non_monotone_table_weight_is_rejected():
    t = np.r_[0.0, 1.0, np.exp2(np.linspace(1, 45, 200))]
    v = np.r_[0.0, 0.0, np.sqrt(t[2:]) - 1]
    v[100] = 0.5 * v[99]
    rep = verify_weight_axioms(WeightFunction.from_table(t, v))
    assert not rep.checks["monotone"]


def test_linear_table_weight_is_rejected():
    t = np.exp2(np.linspace(0, 45, 400))
    rep = verify_weight_axioms(WeightFunction.from_table(np.r_[0.0, t], np.r_[0.0, t - 1]))
    assert not rep.checks["beta_integrable"]


def test_weight_parsing_and_validation():
    assert WeightFunction.parse("gevrey:a=0.5") == WeightFunction.gevrey(0.5)
    assert WeightFunction.parse("logpower:s=2").spec == "logpower:s=2"
    for bad in ("gevrey:a=1.5", "gevrey:s=0.5", "poly:a=1", "gevrey:a=x", "gevrey"):
        with pytest.raises(WeightError):
            WeightFunction.parse(bad)
    with pytest.raises(WeightError):
        WeightFunction.gevrey(0.5)(-1.0)


def test_phi_is_omega_of_exp_without_overflow():
    w = WeightFunction.gevrey(0.5)
    s = np.linspace(0, 20, 11)
    assert np.allclose(w.phi(s), w(np.exp(s)), rtol=1e-12)
    assert math.isfinite(WeightFunction.logpower(2.0).phi(1e4))


@settings(max_examples=50)
@given(st.floats(0.05, 0.95), st.floats(0.0, 1e4))
def test_gevrey_conjugate_closed_form_matches_numeric(a, y):
    w = WeightFunction.gevrey(a)
    closed = float(gevrey_conjugate_closed_form(a, y))
    numeric = float(w.conjugate("numeric_max").numeric(y)[0])
    assert numeric == pytest.approx(closed, rel=1e-8, abs=1e-10)


def test_conjugate_is_convex_nonnegative_and_superlinear():
    for w in FAMILIES:
        c = w.conjugate()
        y = np.linspace(0, 50, 201)
        v = np.asarray(c(y))
        assert c(0.0) == 0.0 and np.all(v >= 0)
        assert np.all(v[1:-1] - 0.5 * (v[:-2] + v[2:]) <= 1e-9 * np.maximum(1, v[1:-1]))
        r = np.asarray(c.ratio(y[1:]))
        assert np.all(np.diff(r[10:]) >= -1e-9)


def test_conjugate_argument_checks():
    with pytest.raises(WeightError):
        WeightFunction.logpower(2.0).conjugate("closed_form")
    with pytest.raises(WeightError):
        WeightFunction.gevrey(0.5).conjugate()(-1.0)


@pytest.mark.parametrize("w", FAMILIES, ids=lambda w: w.spec)
def test_conjugate_inequalities(w):
    rep = verify_conjugate_inequalities(w)
    assert rep.passed, rep.failures


def test_factorial_bound_constant_settles_early_for_small_exponents():
    for a in (0.3, 0.5):
        assert verify_conjugate_inequalities(WeightFunction.gevrey(a)).values["factorial_stable_by_nmax"]


def test_own_exponent_is_not_admissible():
    # with exponent a instead of 1 the sequence keeps growing
    rep = verify_conjugate_inequalities(WeightFunction.gevrey(0.5))
    assert rep.values["own_exponent_log_growth_B=2"] > 0


@pytest.mark.parametrize("w", FAMILIES[1:2] + FAMILIES[3:], ids=lambda w: w.spec)
def test_elementary_inequalities(w):
    assert verify_amplitude_inequalities(w, trials=1000, seed=3).passed


def test_tau_k():
    assert [tau_k(t) for t in (0.0, 0.5, 1.0, 2.0, -1.0, 3.0)] == [0, 0, 0, 2, 2, 3]


def test_excision_and_step_profiles():
    r = np.linspace(0, 5, 501)
    e = excision(r, 2.0, 3.0)
    assert np.all(e[r <= 2.0] == 1.0) and np.all(e[r >= 3.0] == 0.0)
    assert np.all(np.diff(e) <= 0)
    s = smooth_step(r, 1.0, 2.0)
    assert np.all(s[r <= 1] == 0) and np.all(s[r >= 2] == 1)
    assert japanese(np.array([3.0, 4.0])) == pytest.approx(math.sqrt(26.0))


def test_cutoff_family_with_scale_two():
    cf = CutoffFamily(R=2.0)
    conj = WeightFunction.gevrey(0.5).conjugate()
    assert [cf.block(j) for j in (1, 3, 4, 8, 9)] == [1, 1, 2, 2, 3]
    A = cf.radius(conj, 1, 1)
    assert A == pytest.approx(2.0 * math.exp(float(conj(1.0))))
    pts = np.array([[1.9 * A, 0.0], [2.5 * A, 0.0], [3.1 * A, 0.0]])
    vals = cf.phi_j(conj, 1, pts)
    assert vals[0] == 0.0 and 0 < vals[1] < 1 and vals[2] == 1.0
    assert cf.active_terms(conj, 1.0) == [0]
    with pytest.raises(WeightError):
        CutoffFamily(R=0.5)
    with pytest.raises(WeightError):
        CutoffFamily(jn=lambda n: 2 * n)
