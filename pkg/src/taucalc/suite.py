"""Seeded property battery behind ``taucalc suite all``."""
from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from . import multiindex as mi
from .calculus import (change_quantization, combinatorial_identity_check, compose_general, compose_tau,
                       transpose_symbol)
from .exact import QI
from .hermite import oracle_compare
from .io import dumps_symbol, loads_symbol
from .parametrix import decay_sweep, parametrix_terms, parametrix_verify
from .report import Report
from .symbols import PolySymbol
from .weights import (WeightFunction, verify_conjugate_inequalities, verify_amplitude_inequalities,
                      verify_weight_axioms)

TAUS = (Fraction(-1), Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2))


def random_rational(rng: np.random.Generator, den: int = 6, size: int = 5) -> Fraction:
    return Fraction(int(rng.integers(-size, size + 1)), int(rng.integers(1, den + 1)))


def random_poly(rng: np.random.Generator, dim: int, degree: int, nterms: int = 6,
                complex_coeffs: bool = True) -> PolySymbol:
    """Sparse polynomial symbol with exact Gaussian-rational coefficients."""
    keys = [k for k in mi.iterate_upto(degree, 2 * dim)]
    pick = rng.choice(len(keys), size=min(nterms, len(keys)), replace=False)
    terms = {}
    for i in pick:
        k = keys[int(i)]
        im = random_rational(rng) if complex_coeffs else Fraction(0)
        terms[(k[:dim], k[dim:])] = QI(random_rational(rng), im)
    return PolySymbol(dim, terms)


def _timed(rep: Report, t0: float) -> Report:
    rep.set("seconds", round(time.perf_counter() - t0, 3))
    return rep


def quantization_properties(seed: int, count: int = 100) -> Report:
    rng = np.random.default_rng(seed)
    rep = Report("quantization-round-trip")
    t0 = time.perf_counter()
    for i in range(count):
        d = int(rng.integers(1, 4))
        a = random_poly(rng, d, int(rng.integers(0, 7)), int(rng.integers(1, 7)))
        t1, t2, t3 = (TAUS[int(j)] for j in rng.integers(0, len(TAUS), 3))
        b = change_quantization(a, t1, t2)
        rep.check("round_trip", change_quantization(b, t2, t1) == a, f"symbol #{i}: {a} at {t1}->{t2}->{t1}")
        rep.check("cocycle", change_quantization(b, t2, t3) == change_quantization(a, t1, t3),
                  f"symbol #{i}: {a} at {t1}->{t2}->{t3}")
        rep.check("file_round_trip", loads_symbol(dumps_symbol(a)) == a, f"symbol #{i}")
    return _timed(rep, t0)


def calculus_properties(seed: int, count: int = 30) -> Report:
    rng = np.random.default_rng(seed + 1)
    rep = Report("calculus-properties")
    t0 = time.perf_counter()
    for i in range(count):
        d = int(rng.integers(1, 3))
        a, b, c = (random_poly(rng, d, 3, 4) for _ in range(3))
        t = TAUS[int(rng.integers(0, len(TAUS)))]
        ab = compose_tau(a, b, t)
        rep.check("associativity", compose_tau(ab, c, t) == compose_tau(a, compose_tau(b, c, t), t), f"triple #{i}")
        t1, t2 = (TAUS[int(j)] for j in rng.integers(0, len(TAUS), 2))
        direct = compose_general(change_quantization(a, t, t1), t1, change_quantization(b, t, t2), t2, t)
        rep.check("general_route", direct == ab, f"pair #{i} with tau1={t1}, tau2={t2}")
        rep.check("double_transpose", transpose_symbol(transpose_symbol(a, t), t) == a, f"symbol #{i}")
    return _timed(rep, t0)


def oracle_properties(seed: int, count: int = 10) -> Report:
    rng = np.random.default_rng(seed + 2)
    rep = Report("operator-oracle")
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(count):
        a = random_poly(rng, 1, 3, 4)
        b = random_poly(rng, 1, 3, 4)
        t1, t2 = (TAUS[int(j)] for j in rng.integers(0, len(TAUS), 2))
        for sub in (oracle_compare("quantizations", a, t1, t2, seed=seed),
                    oracle_compare("composition", a, b, t1, seed=seed),
                    oracle_compare("transpose", a, t1, seed=seed)):
            rep.check(sub.name, sub.passed, "; ".join(sub.failures))
            worst = max(worst, sub.values["max_error"])
    rep.set("max_error", worst)
    return _timed(rep, t0)


def parametrix_properties(order: int = 6) -> Report:
    rep = Report("parametrix")
    t0 = time.perf_counter()
    p = 1 + PolySymbol.x(1) ** 2 + PolySymbol.xi(1) ** 2
    for t in (Fraction(0), Fraction(1, 2)):
        rep.merge(parametrix_verify(parametrix_terms(p, t, order), p), prefix=f"tau={t}")
    rep.merge(decay_sweep(p, 0), prefix="decay")
    return _timed(rep, t0)


def weight_properties(seed: int, trials: int = 1000) -> Report:
    rep = Report("weights")
    t0 = time.perf_counter()
    for w in (WeightFunction.gevrey(0.3), WeightFunction.gevrey(0.5), WeightFunction.gevrey(0.7),
              WeightFunction.logpower(2.0)):
        rep.merge(verify_weight_axioms(w), prefix=f"{w.spec}.axioms")
        rep.merge(verify_conjugate_inequalities(w), prefix=f"{w.spec}.conjugate")
        rep.merge(verify_amplitude_inequalities(w, trials=trials, seed=seed), prefix=f"{w.spec}.amplitude")
    return _timed(rep, t0)


def run_suite(seed: int = 0, quick: bool = False) -> list[Report]:
    t0 = time.perf_counter()
    reports = [
        quantization_properties(seed, 20 if quick else 100),
        calculus_properties(seed, 8 if quick else 30),
        oracle_properties(seed, 3 if quick else 10),
        _timed(combinatorial_identity_check(*((6, 2, 4) if quick else (12, 3, 6))), t0),
        parametrix_properties(3 if quick else 6),
        weight_properties(seed, 200 if quick else 1000),
    ]
    return reports
