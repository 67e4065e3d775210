"""Acceptance criteria 1-11, each at its stated tolerance and runtime bound.

Every test records a PASS/FAIL line (shown in the pytest terminal summary).
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from taucalc.calculus import (change_quantization, combinatorial_identity_check, compose_general, compose_tau,
                              transpose_symbol)
from taucalc.exact import I
from taucalc.hermite import (DiffOperator, GridFunction, HermiteExpansion, apply_operator, default_test_set,
                             grid_apply_op_tau, make_grid, oracle_compare, quantize_to_operator)
from taucalc.parametrix import (HypoParams, check_hypoelliptic, decay_sweep, hypo_invariance_check,
                                parametrix_terms, parametrix_verify)
from taucalc.suite import TAUS, random_poly
from taucalc.symbols import PolySymbol
from taucalc.weights import (ConjugateGrid, WeightFunction, verify_conjugate_inequalities,
                             verify_amplitude_inequalities)

HALF = Fraction(1, 2)


def _rel(diff: HermiteExpansion, ref: HermiteExpansion) -> float:
    return diff.norm() / max(ref.norm(), 1e-300)


def test_criterion_01_quantization_round_trip(record_criterion):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    failures = []
    checks = 0
    for i in range(100):
        d = int(rng.integers(1, 4))
        a = random_poly(rng, d, int(rng.integers(0, 7)), int(rng.integers(1, 9)))
        for t1 in TAUS:
            for t2 in TAUS:
                b = change_quantization(a, t1, t2)
                if change_quantization(b, t2, t1) != a:
                    failures.append(f"round trip #{i} {t1}->{t2}")
                t3 = TAUS[int(rng.integers(0, len(TAUS)))]
                if change_quantization(b, t2, t3) != change_quantization(a, t1, t3):
                    failures.append(f"cocycle #{i} {t1}->{t2}->{t3}")
                checks += 2
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 10.0
    record_criterion(1, ok, f"{checks} exact checks, {len(failures)} violations, {elapsed:.2f}s (< 10s)")
    assert not failures, failures[:5]
    assert elapsed < 10.0


def test_criterion_02_operator_quantization_equivalence(record_criterion):
    rng = np.random.default_rng(102)
    tests = default_test_set(1, seed=102, kmax=20, nrandom=20)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        a = random_poly(rng, 1, int(rng.integers(1, 6)), 5)
        t1, t2 = (TAUS[int(j)] for j in rng.integers(0, len(TAUS), 2))
        rep = oracle_compare("quantizations", a, t1, t2, tests=tests)
        worst = max(worst, rep.values["max_error"])
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 30.0
    record_criterion(2, ok, f"max relative oracle error {worst:.2e} (<= 1e-10), {elapsed:.2f}s (< 30s)")
    assert worst <= 1e-10
    assert elapsed < 30.0


def test_criterion_03_weyl_benchmark(record_criterion):
    x, xi = PolySymbol.x(1), PolySymbol.xi(1)
    a = x * xi
    w = change_quantization(a, 0, HALF)
    exact = w == a + PolySymbol.constant(1, I * HALF)
    xD = DiffOperator(1, {((1,), (1,)): 1})
    X = DiffOperator(1, {((1,), (0,)): 1})
    D = DiffOperator(1, {((0,), (1,)): 1})
    sym_half = (X @ D + D @ X).scale(HALF)
    op_w = quantize_to_operator(w, HALF)
    op_w_plain = quantize_to_operator(a, HALF)
    err = err_sym = 0.0
    for u in default_test_set(1, seed=103):
        ref = apply_operator(xD, u)
        err = max(err, _rel(apply_operator(op_w, u) - ref, ref))
        ref2 = apply_operator(sym_half, u)
        err_sym = max(err_sym, _rel(apply_operator(op_w_plain, u) - ref2, ref2))
    ok = exact and err <= 1e-12 and err_sym <= 1e-12
    record_criterion(3, ok, f"xi x -> {w} exact={exact}; Op_w vs x.D {err:.1e}; Op_w(x xi) vs (xD+Dx)/2 "
                            f"{err_sym:.1e} (<= 1e-12)")
    assert exact
    assert err <= 1e-12 and err_sym <= 1e-12


def test_criterion_04_composition(record_criterion):
    rng = np.random.default_rng(104)
    tests = default_test_set(1, seed=104)
    t0 = time.perf_counter()
    worst = 0.0
    route_bad = assoc_bad = 0
    for i in range(50):
        t = (Fraction(0), HALF, Fraction(1))[i % 3]
        a = random_poly(rng, 1, 3, 4)
        b = random_poly(rng, 1, 3, 4)
        c = random_poly(rng, 1, 3, 4)
        worst = max(worst, oracle_compare("composition", a, b, t, tests=tests).values["max_error"])
        t1, t2 = (TAUS[int(j)] for j in rng.integers(0, len(TAUS), 2))
        ab = compose_tau(a, b, t)
        route = compose_general(change_quantization(a, t, t1), t1, change_quantization(b, t, t2), t2, t)
        route_bad += route != ab
        assoc_bad += compose_tau(ab, c, t) != compose_tau(a, compose_tau(b, c, t), t)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and not route_bad and not assoc_bad and elapsed < 60.0
    record_criterion(4, ok, f"oracle {worst:.2e} (<= 1e-10), route mismatches {route_bad}, "
                            f"associativity failures {assoc_bad}, {elapsed:.2f}s (< 60s)")
    assert worst <= 1e-10
    assert route_bad == 0 and assoc_bad == 0
    assert elapsed < 60.0


def test_criterion_05_transpose(record_criterion):
    rng = np.random.default_rng(105)
    worst = 0.0
    weyl_bad = double_bad = 0
    for i in range(30):
        d = 1 if i < 20 else 2
        a = random_poly(rng, d, 4, 5)
        t = TAUS[i % len(TAUS)]
        worst = max(worst, oracle_compare("transpose", a, t, seed=105 + i).values["max_error"])
        weyl_bad += transpose_symbol(a, HALF) != a.reflect_xi()
        double_bad += transpose_symbol(transpose_symbol(a, t), t) != a
    ok = worst <= 1e-10 and not weyl_bad and not double_bad
    record_criterion(5, ok, f"pairing defect {worst:.2e} (<= 1e-10), Weyl reflection mismatches {weyl_bad}, "
                            f"double-transpose mismatches {double_bad}")
    assert worst <= 1e-10
    assert weyl_bad == 0 and double_bad == 0


def test_criterion_06_combinatorial_identities(record_criterion):
    t0 = time.perf_counter()
    rep = combinatorial_identity_check(max_mnr=12, max_dim=3, max_order=6)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and elapsed < 10.0
    record_criterion(6, ok, f"Vandermonde cases {rep.values.get('vandermonde_cases')}, "
                            f"four-factorial cases {rep.values.get('four_factorial_cases')}, violations {len(rep.failures)}, "
                            f"{elapsed:.2f}s (< 10s)")
    assert rep.passed, rep.failures[:5]
    assert elapsed < 10.0


def test_criterion_07_parametrix_exactness(record_criterion, osc):
    t0 = time.perf_counter()
    reports = [parametrix_verify(parametrix_terms(osc, t, 6), osc) for t in (Fraction(0), HALF)]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in reports) and elapsed < 60.0
    record_criterion(7, ok, f"r_0 = 1, r_1..r_6 = 0 at tau in (0, 1/2): "
                            f"{[r.passed for r in reports]}, {elapsed:.2f}s (< 60s)")
    for r in reports:
        assert r.passed, r.failures
    assert elapsed < 60.0


def test_criterion_08_residual_decay(record_criterion, osc):
    t0 = time.perf_counter()
    rep = decay_sweep(osc, 0, range(5), annuli=(16, 512), rho=1.0)
    elapsed = time.perf_counter() - t0
    slopes = rep.values["slopes"]
    bounds = [-(N + 1) + 0.2 for N in range(5)]
    within = all(s <= b for s, b in zip(slopes, bounds))
    strict = all(b < a for a, b in zip(slopes, slopes[1:]))
    ok = within and strict and elapsed < 60.0
    record_criterion(8, ok, "slopes " + ", ".join(f"N={N}: {s:.3f} (<= {b:.1f})" for N, (s, b)
                                                  in enumerate(zip(slopes, bounds)))
                     + f"; strictly decreasing={strict}; {elapsed:.2f}s (< 60s)")
    assert within, slopes
    assert strict, slopes
    assert elapsed < 60.0


def test_criterion_09_hypoellipticity(record_criterion, osc, twisted):
    w = WeightFunction.gevrey(0.5)
    # m > 0: |p| ~ <z>^2 is O(e^{m omega}) only for m > 0
    hp = HypoParams(w, m=1.0, m0=0.0, rho=1.0, R=2.0)
    r_osc = check_hypoelliptic(osc, hp, R_max=100.0)
    bounded = all(math.isfinite(r_osc.values[k]) for k in ("C1", "C2", "C")) and r_osc.values["C1"] >= 1.0
    r_tw = check_hypoelliptic(twisted, hp, R_max=100.0)
    wit = np.asarray(r_tw.values.get("witness", {}).get("point", [np.nan] * 4))
    x, y, xi, eta = wit
    on_zero_set = abs(xi - y / 2) + abs(eta - x / 2) <= 1e-6 * np.linalg.norm(wit)
    fails_i = (not r_tw.checks["(i) lower"]) and bool(r_tw.values.get("unbounded_zero_set"))
    inv = hypo_invariance_check(osc, 0, HALF, hp, R_max=100.0)
    ok = r_osc.passed and bounded and fails_i and on_zero_set and inv.passed
    record_criterion(9, ok, f"oscillator passes={r_osc.passed} (C1={r_osc.values['C1']:.3g}, "
                            f"C2={r_osc.values['C2']:.3g}, C={r_osc.values['C']:.3g}, n={r_osc.values['n']}); "
                            f"twisted fails (i)={fails_i}, witness on zero set={on_zero_set}; "
                            f"invariance 0->1/2 passes={inv.passed}")
    assert r_osc.passed and bounded, r_osc.failures
    assert fails_i and on_zero_set, r_tw.values
    assert inv.passed, inv.failures


def test_criterion_10_weights(record_criterion):
    failures = []
    y = np.concatenate([ConjugateGrid().y, np.geomspace(100.0, 1e4, 40)])
    worst = 0.0
    for a in (0.3, 0.5, 0.7):
        w = WeightFunction.gevrey(a)
        closed = w.conjugate("closed_form")
        numeric = w.conjugate("numeric_max")
        if closed(0.0) != 0.0 or numeric(0.0) != 0.0:
            failures.append(f"phi*(0) != 0 for a={a}")
        c = closed(y)
        rel = np.abs(numeric.numeric(y) - c) / np.maximum(np.abs(c), 1e-300)
        rel = np.where(c == 0, np.abs(numeric.numeric(y)), rel)
        worst = max(worst, float(rel.max()))
    argmax = {}
    for w in (WeightFunction.gevrey(0.3), WeightFunction.gevrey(0.5), WeightFunction.gevrey(0.7),
              WeightFunction.logpower(2.0)):
        rep = verify_conjugate_inequalities(w)
        argmax[w.spec] = max(rep.values["factorial_bound_argmax"].values())
        for k in ("phi_star_zero", "conjugate_scaling", "conjugate_midpoint", "factorial_bound_bound"):
            if not rep.checks[k]:
                failures.append(f"{w.spec}: {k}")
        if w.spec in ("gevrey:a=0.3", "gevrey:a=0.5") and not rep.values["factorial_stable_by_nmax"]:
            failures.append(f"{w.spec}: factorial constant not reached by n = 30")
        amp_rep = verify_amplitude_inequalities(w, trials=1000, seed=110)
        if not amp_rep.passed:
            failures.extend(f"{w.spec}: {f}" for f in amp_rep.failures)
    ok = worst <= 1e-8 and not failures
    record_criterion(10, ok, f"closed vs numeric conjugate {worst:.2e} (<= 1e-8); "
                             f"{len(failures)} failed inequality checks; factorial-bound argmax n "
                             + ", ".join(f"{k} {v}" for k, v in argmax.items()))
    assert worst <= 1e-8
    assert not failures, failures


@pytest.mark.xfail(strict=True, reason="the maximizing n of B^n n! exp(-lambda phi*(n/lambda)) lies beyond 30 "
                                       "for gevrey(0.7) and logpower(2); the constant is finite but not reached")
@pytest.mark.parametrize("w", [WeightFunction.gevrey(0.7), WeightFunction.logpower(2.0)], ids=lambda w: w.spec)
def test_criterion_10_factorial_constant_by_n30_slow_weights(w):
    rep = verify_conjugate_inequalities(w)
    assert rep.checks["factorial_bound"]
    assert rep.values["factorial_stable_by_nmax"], rep.values["factorial_bound_argmax"]


def test_criterion_11_grid_quadrature(record_criterion):
    t0 = time.perf_counter()
    x = make_grid(1024, 12.0)
    g = np.exp(-x * x / 2)
    U = GridFunction(x, g)
    ident = grid_apply_op_tau(PolySymbol.constant(1, 1), Fraction(1, 3), U)
    e_id = float(np.max(np.abs(ident.values - g)))
    der = grid_apply_op_tau(PolySymbol.xi(1), 0, U)
    e_der = float(np.max(np.abs(der.values - 1j * x * g)))
    rng = np.random.default_rng(111)
    worst = 0.0
    for i in range(4):
        a = random_poly(rng, 1, 3, 5)
        t = (Fraction(0), HALF, Fraction(1), Fraction(1, 3))[i]
        T = quantize_to_operator(a, t)
        for k in range(7):
            u = HermiteExpansion.mode(k)
            ref = apply_operator(T, u).to_grid(x)
            out = grid_apply_op_tau(a, t, GridFunction(x, u.to_grid(x)))
            worst = max(worst, float(np.max(np.abs(out.values - ref)) / max(np.max(np.abs(ref)), 1e-300)))
    elapsed = time.perf_counter() - t0
    ok = e_id <= 1e-8 and e_der <= 1e-6 and worst <= 1e-6 and elapsed < 120.0
    record_criterion(11, ok, f"identity {e_id:.1e} (<= 1e-8), xi on Gaussian {e_der:.1e} (<= 1e-6), "
                             f"ladder agreement {worst:.1e} (<= 1e-6), {elapsed:.1f}s at N=1024 (< 120s)")
    assert e_id <= 1e-8 and e_der <= 1e-6
    assert worst <= 1e-6
    assert elapsed < 120.0


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
