"""Weight functions, Young conjugates, cutoff radii and excision functions.

Two concrete weight families are supported, both normalized so that the
weight vanishes identically on [0, 1]:

* ``gevrey(a)``   omega(t) = max(0, t**a - 1),            0 < a < 1
* ``logpower(s)`` omega(t) = max(0, log(1+t)**s - log(2)**s),  s > 1

A ``table`` family (piecewise-linear interpolation of given samples) exists
for negative controls of the axiom checker.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .report import Report

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class WeightError(ValueError):
    pass


class WeightFunction:
    """A concrete weight omega acting radially on vectors."""

    def __init__(self, family: str, param: float | None = None,
                 table: tuple[Sequence[float], Sequence[float]] | None = None):
        self.family = family
        if family == "gevrey":
            if param is None or not 0 < param < 1:
                raise WeightError(f"gevrey exponent must lie in (0,1), got {param}")
        elif family == "logpower":
            if param is None or not param > 1:
                raise WeightError(f"logpower exponent must exceed 1, got {param}")
        elif family == "table":
            if table is None:
                raise WeightError("table weight needs (t, value) samples")
            ts = np.asarray(table[0], dtype=float)
            vs = np.asarray(table[1], dtype=float)
            if ts.shape != vs.shape or ts.ndim != 1 or np.any(np.diff(ts) <= 0):
                raise WeightError("table weight needs strictly increasing t samples")
            self._table = (ts, vs)
        else:
            raise WeightError(f"unknown weight family {family!r}")
        self.param = None if param is None else float(param)

    # constructors ---------------------------------------------------------
    @classmethod
    def gevrey(cls, a: float) -> "WeightFunction":
        return cls("gevrey", a)

    @classmethod
    def logpower(cls, s: float) -> "WeightFunction":
        return cls("logpower", s)

    @classmethod
    def from_table(cls, t: Sequence[float], values: Sequence[float]) -> "WeightFunction":
        return cls("table", table=(t, values))

    @classmethod
    def parse(cls, spec: str) -> "WeightFunction":
        """Parse ``gevrey:a=0.5`` or ``logpower:s=2``."""
        try:
            family, _, rest = spec.strip().partition(":")
            kv = dict(item.split("=", 1) for item in rest.split(",") if item)
        except ValueError as exc:
            raise WeightError(f"malformed weight spec {spec!r}") from exc
        key = {"gevrey": "a", "logpower": "s"}.get(family)
        if key is None:
            raise WeightError(f"unknown weight family in {spec!r}")
        if set(kv) != {key}:
            raise WeightError(f"weight spec {spec!r} needs exactly the parameter {key!r}")
        try:
            value = float(kv[key])
        except ValueError as exc:
            raise WeightError(f"non-numeric parameter in {spec!r}") from exc
        return cls(family, value)

    @property
    def spec(self) -> str:
        if self.family == "gevrey":
            return f"gevrey:a={self.param:g}"
        if self.family == "logpower":
            return f"logpower:s={self.param:g}"
        return "table"

    def __repr__(self):
        return f"WeightFunction({self.spec})"

    def __eq__(self, other):
        if not isinstance(other, WeightFunction):
            return NotImplemented
        if self.family == "table" or other.family == "table":
            return self is other
        return (self.family, self.param) == (other.family, other.param)

    def __hash__(self):
        return hash((self.family, self.param)) if self.family != "table" else id(self)

    # evaluation -----------------------------------------------------------
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise WeightError("weight argument must be nonnegative")
        if self.family == "gevrey":
            out = np.maximum(0.0, np.power(t, self.param) - 1.0)
        elif self.family == "logpower":
            s = self.param
            out = np.maximum(0.0, np.log1p(t) ** s - math.log(2.0) ** s)
        else:
            ts, vs = self._table
            out = np.interp(t, ts, vs)
        return out if out.ndim else float(out)

    def radial(self, z) -> np.ndarray:
        """omega(|z|) with the vector along the last axis."""
        z = np.asarray(z, dtype=float)
        return self(np.linalg.norm(z, axis=-1))

    def phi(self, s):
        """phi(s) = omega(exp(s)), computed without overflow for large s."""
        s = np.asarray(s, dtype=float)
        if self.family == "gevrey":
            out = np.where(s > 0, np.expm1(self.param * np.maximum(s, 0.0)), 0.0)
        elif self.family == "logpower":
            p = self.param
            out = np.maximum(0.0, np.logaddexp(0.0, s) ** p - math.log(2.0) ** p)
        else:
            out = self(np.exp(s))
        return out if np.ndim(out) else float(out)

    # doubling constants ---------------------------------------------------
    def fit_doubling(self, factor: float = 2.0, kmax: int = 60, per_octave: int = 32) -> float:
        """sup over a geometric grid of omega(factor t) / (omega(t) + 1)."""
        t = np.concatenate([np.linspace(0.0, 1.0, 65), np.exp2(np.linspace(0.0, kmax, kmax * per_octave + 1))])
        return float(np.max(self(factor * t) / (self(t) + 1.0)))

    @cached_property
    def L_alpha(self) -> float:
        """Constant of the doubling condition omega(2t) <= L(omega(t)+1)."""
        if self.family == "gevrey":
            # the ratio increases to 2^a
            return 2.0 ** self.param
        return self.fit_doubling(2.0) + 1e-9

    @cached_property
    def L(self) -> float:
        """Working constant: satisfies both omega(2t) and omega(e t) bounds.

        The conjugate inequalities need omega(e t) <= L(omega(t)+1); the
        standing convention is that a single L >= 1 serves both purposes.
        """
        if self.family == "gevrey":
            return max(1.0, math.e ** self.param)
        return max(1.0, self.L_alpha, self.fit_doubling(math.e) + 1e-9)

    def conjugate(self, method: str | None = None) -> "YoungConjugate":
        return YoungConjugate(self, method)


class YoungConjugate:
    """phi*(y) = sup_{s >= 0} (s y - phi(s)) with a thread-safe memo."""

    def __init__(self, owner: WeightFunction, method: str | None = None):
        if method is None:
            method = "closed_form" if owner.family == "gevrey" else "numeric_max"
        if method not in ("closed_form", "numeric_max"):
            raise WeightError(f"unknown conjugate method {method!r}")
        if method == "closed_form" and owner.family != "gevrey":
            raise WeightError("closed form conjugate only exists for the gevrey family")
        self.owner = owner
        self.method = method
        self._memo: dict[float, float] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"YoungConjugate({self.owner.spec}, {self.method})"

    def __call__(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr < 0):
            raise WeightError("conjugate argument must be nonnegative")
        if arr.ndim == 0:
            key = float(arr)
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            val = float(self._evaluate(arr[None])[0])
            with self._lock:
                self._memo[key] = val
            return val
        return self._evaluate(arr.ravel()).reshape(arr.shape)

    def _evaluate(self, y: np.ndarray) -> np.ndarray:
        if self.method == "closed_form":
            return gevrey_conjugate_closed_form(self.owner.param, y)
        return self.numeric(y)

    def numeric(self, y) -> np.ndarray:
        """Golden-section maximization of the concave objective, vectorized."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        w = self.owner

        def f(s):
            return s * y - w.phi(s)

        lo = np.zeros_like(y)
        if w.family == "gevrey":
            a = w.param
            hi = np.log((y + 1.0) / a) / a + 10.0
        else:
            hi = np.ones_like(y)
            for _ in range(200):
                grow = f(2.0 * hi) > f(hi)
                if not np.any(grow):
                    break
                hi = np.where(grow, 2.0 * hi, hi)
            hi = 2.0 * hi
        a_ = hi - _GOLDEN * (hi - lo)
        b_ = lo + _GOLDEN * (hi - lo)
        fa, fb = f(a_), f(b_)
        for _ in range(400):
            left = fa >= fb
            # keep [lo, b] when the left probe wins, else [a, hi]
            hi = np.where(left, b_, hi)
            lo = np.where(left, lo, a_)
            new_a = np.where(left, hi - _GOLDEN * (hi - lo), b_)
            new_b = np.where(left, a_, lo + _GOLDEN * (hi - lo))
            fa_new = np.where(left, f(new_a), fb)
            fb_new = np.where(left, fa, f(new_b))
            a_, b_, fa, fb = new_a, new_b, fa_new, fb_new
            if np.all(hi - lo <= 1e-14 * (1.0 + hi)):
                break
        best = np.maximum(np.maximum(fa, fb), f((lo + hi) / 2.0))
        best = np.maximum(best, 0.0)  # s = 0 gives 0 because phi(0) = 0
        return np.where(y == 0, 0.0, best)

    def ratio(self, y):
        """phi*(y)/y, the exponent in cutoff radii."""
        y = np.asarray(y, dtype=float)
        return np.asarray(self(y)) / y


def gevrey_conjugate_closed_form(a: float, y) -> np.ndarray:
    """Closed-form conjugate of phi(s) = exp(a s) - 1 on s >= 0.

    The maximizer sits at s = log(y/a)/a when y > a and at s = 0 otherwise,
    so the value is 0 for y <= a and (y/a)(log(y/a) - 1) + 1 beyond.
    """
    y = np.asarray(y, dtype=float)
    u = np.where(y > a, y / a, 1.0)
    return np.where(y > a, u * (np.log(u) - 1.0) + 1.0, 0.0)


# excision and cutoffs ------------------------------------------------------

def _psi(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def excision(t, inner: float = 2.0, outer: float = 3.0):
    """Smooth radial profile: 1 for |t| <= inner, 0 for |t| >= outer."""
    t = np.abs(np.asarray(t, dtype=float))
    up = _psi(outer - t)
    down = _psi(t - inner)
    return up / (up + down)


def smooth_step(t, start: float, end: float):
    """0 below ``start``, 1 above ``end``, C-infinity in between."""
    t = np.asarray(t, dtype=float)
    return 1.0 - excision((t - start) / (end - start) + 2.0, 2.0, 3.0)


def japanese(z) -> np.ndarray:
    """<z> = sqrt(1 + |z|^2) with the vector along the last axis."""
    z = np.asarray(z, dtype=float)
    return np.sqrt(1.0 + np.sum(z * z, axis=-1))


@dataclass
class CutoffFamily:
    """Cutoffs phi_j = 1 - Phi(z / A_{n,j}) attached to blocks j_n <= j < j_{n+1}."""

    R: float = 1.0
    jn: Callable[[int], int] = field(default=lambda n: n * n)
    inner_radius: float = 2.0
    outer_radius: float = 3.0

    def __post_init__(self):
        if self.R < 1:
            raise WeightError("cutoff scale R must be >= 1")
        if self.jn(1) != 1:
            raise WeightError("block sequence must start at j_1 = 1")
        for n in range(1, 50):
            if self.jn(n + 1) <= self.jn(n):
                raise WeightError("block sequence j_n must be strictly increasing")

    def block(self, j: int) -> int:
        """n with j_n <= j < j_{n+1}."""
        if j < 1:
            raise WeightError("blocks are defined for j >= 1")
        n = 1
        while self.jn(n + 1) <= j:
            n += 1
        return n

    def radius(self, conj: YoungConjugate, n: int, j: int) -> float:
        """A_{n,j} = R exp((n/j) phi*(j/n))."""
        if n < 1 or j < 1:
            raise WeightError("cutoff radius needs n, j >= 1")
        return self.R * math.exp(conj(j / n) * n / j)

    def phi_j(self, conj: YoungConjugate, j: int, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if j == 0:
            return np.ones(points.shape[:-1])
        A = self.radius(conj, self.block(j), j)
        r = np.linalg.norm(points, axis=-1) / A
        return 1.0 - excision(r, self.inner_radius, self.outer_radius)

    def active_terms(self, conj: YoungConjugate, radius: float, jmax: int | None = None) -> list[int]:
        """All j (up to jmax) whose cutoff is nonzero somewhere at |z| = radius."""
        out = [0]
        n = 1
        while True:
            lo = self.jn(n)
            if jmax is not None and lo > jmax:
                break
            # smallest radius in the block is at j = j_n since phi*(y)/y increases
            if self.inner_radius * self.radius(conj, n, lo) >= radius:
                break
            hi = self.jn(n + 1)
            for j in range(lo, hi if jmax is None else min(hi, jmax + 1)):
                if self.inner_radius * self.radius(conj, n, j) < radius:
                    out.append(j)
            n += 1
        return out


# verifiers -----------------------------------------------------------------

def verify_weight_axioms(w: WeightFunction, samples: int = 400) -> Report:
    """Sampled checks of monotonicity, doubling, integrability, growth and convexity."""
    if samples < 100:
        raise WeightError("verify_weight_axioms needs at least 100 samples")
    rep = Report(f"weight-axioms[{w.spec}]")

    t = np.unique(np.concatenate([np.linspace(0.0, 1.0, samples // 4),
                                  np.exp2(np.linspace(0.0, 40.0, samples))]))
    vals = np.asarray(w(t))
    dv = np.diff(vals)
    bad = np.nonzero(dv < -1e-12 * np.maximum(1.0, np.abs(vals[1:])))[0]
    rep.check("monotone", bad.size == 0,
              f"omega decreases between t={t[bad[0]]:.6g} and t={t[bad[0] + 1]:.6g}" if bad.size else "")
    unit = t <= 1.0
    zero_bad = np.nonzero(np.abs(vals[unit]) > 0)[0]
    rep.check("vanishes_on_unit_interval", zero_bad.size == 0,
              f"omega({t[unit][zero_bad[0]]:.6g}) != 0" if zero_bad.size else "")

    # (alpha)
    L_fit = max(w.fit_doubling(2.0), float(np.max(np.asarray(w(2 * t)) / (vals + 1.0)))) + 1e-9
    rep.set("L_alpha_fit", L_fit)
    rep.set("L", w.L)
    viol = np.nonzero(np.asarray(w(2 * t)) > w.L * (vals + 1.0) * (1 + 1e-12))[0]
    rep.check("alpha_doubling", viol.size == 0 and math.isfinite(L_fit),
              f"omega(2t) > L(omega(t)+1) at t={t[viol[0]]:.6g}" if viol.size else "")

    # (beta): tail increments of int_1^T omega(t)/t^2 on dyadic pieces
    incs = []
    for k in range(1, 41):
        val, _ = integrate.quad(lambda s: float(w(s)) / (s * s), 2.0 ** (k - 1), 2.0 ** k, limit=200)
        incs.append(val)
    incs = np.asarray(incs)
    partial = np.cumsum(incs)
    rep.set("beta_integral_T=2^40", float(partial[-1]))
    rep.set("beta_last_increment", float(incs[-1]))
    tail = incs[20:]
    shrink = bool(np.all(np.diff(tail) < 0)) and incs[-1] < 1e-2 * max(partial[-1], 1e-300)
    first_bad = 20 + int(np.argmax(np.diff(tail) >= 0)) + 1 if not np.all(np.diff(tail) < 0) else None
    rep.check("beta_integrable", shrink,
              f"dyadic increment not shrinking at k={first_bad}" if first_bad else "tail increment too large")

    # (gamma): omega(t)/log t increasing along t = 2^k
    kk = np.arange(1, 41)
    gam = np.asarray(w(np.exp2(kk))) / (kk * math.log(2.0))
    rep.set("gamma_ratio_k=40", float(gam[-1]))
    gbad = np.nonzero(np.diff(gam[len(gam) // 2:]) <= 0)[0]
    rep.check("gamma_growth", gbad.size == 0 and gam[-1] > gam[len(gam) // 2],
              f"omega(t)/log t not increasing at t=2^{kk[len(gam) // 2 + gbad[0]]}" if gbad.size else "")

    # (delta): midpoint convexity of phi on a uniform grid
    s = np.linspace(-2.0, 40.0 * math.log(2.0), 4 * samples + 1)
    ph = np.asarray(w.phi(s))
    mid = ph[1:-1] - 0.5 * (ph[:-2] + ph[2:])
    cbad = np.nonzero(mid > 1e-12 * np.maximum(1.0, np.abs(ph[1:-1])))[0]
    rep.set("convexity_violations", int(cbad.size))
    rep.check("delta_convex", cbad.size == 0,
              f"phi not midpoint convex at s={s[1 + cbad[0]]:.6g}" if cbad.size else "")
    return rep


@dataclass
class ConjugateGrid:
    y: np.ndarray = field(default_factory=lambda: np.concatenate([np.linspace(0.01, 1.0, 25), np.linspace(1.0, 100.0, 100)[1:]]))
    lambdas: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0)
    ns: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    B: tuple[float, ...] = (1.0, 2.0, 4.0)
    factorial_lambdas: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0)
    factorial_nmax: int = 30
    factorial_horizon: int = 5000


def factorial_sequence(conj: YoungConjugate, B: float, lam: float, exponent: float, nmax: int) -> np.ndarray:
    """log of B^n n! exp(-exponent * lam * phi*(n/lam)) for n = 0..nmax."""
    n = np.arange(nmax + 1)
    logfact = np.array([math.lgamma(k + 1) for k in n])
    return n * math.log(B) + logfact - exponent * lam * np.asarray(conj(n / lam))


def verify_conjugate_inequalities(w: WeightFunction, grid: ConjugateGrid | None = None,
                                  conj: YoungConjugate | None = None) -> Report:
    grid = grid or ConjugateGrid()
    conj = conj or w.conjugate()
    rep = Report(f"conjugate-inequalities[{w.spec}]")
    L = w.L
    rep.set("L", L)
    rep.check("phi_star_zero", conj(0.0) == 0.0, f"phi*(0) = {conj(0.0)}")

    y = grid.y
    worst = -math.inf
    first = None
    for lam in grid.lambdas:
        for n in grid.ns:
            Ln = L ** n
            lhs = lam * Ln * np.asarray(conj(y / (lam * Ln))) + n * y
            rhs = lam * np.asarray(conj(y / lam)) + lam * sum(L ** j for j in range(1, n + 1))
            gap = lhs - rhs
            tol = 1e-9 * np.maximum(1.0, np.abs(rhs))
            worst = max(worst, float(np.max(gap)))
            bad = np.nonzero(gap > tol)[0]
            if bad.size and first is None:
                first = (lam, n, float(y[bad[0]]))
    rep.set("conjugate_scaling_max_gap", worst)
    rep.check("conjugate_scaling", first is None,
              f"violated at lambda={first[0]}, n={first[1]}, y={first[2]}" if first else "")

    s = grid.y[::4]
    S, T = np.meshgrid(s, s, indexing="ij")
    first = None
    for lam in grid.lambdas:
        left = 2 * lam * np.asarray(conj((S + T) / (2 * lam)))
        mid = lam * np.asarray(conj(S / lam)) + lam * np.asarray(conj(T / lam))
        right = lam * np.asarray(conj((S + T) / lam))
        tol = 1e-9 * np.maximum(1.0, np.abs(right))
        for label, gap in (("left", left - mid), ("right", mid - right)):
            bad = np.argwhere(gap > tol)
            if bad.size and first is None:
                i, j = bad[0]
                first = (label, lam, float(S[i, j]), float(T[i, j]))
    rep.check("conjugate_midpoint", first is None,
              f"{first[0]} inequality violated at lambda={first[1]}, s={first[2]}, t={first[3]}" if first else "")

    # condition (beta) forces omega(t) = o(t), so exponent 1 is always admissible
    fits = {}
    argmax = {}
    ok = True
    msg = ""
    for B in grid.B:
        for lam in grid.factorial_lambdas:
            logc = factorial_sequence(conj, B, lam, 1.0, grid.factorial_horizon)
            k = int(np.argmax(logc))
            key = f"B={B:g},lambda={lam:g}"
            fits[key] = float(np.exp(logc[k]))
            argmax[key] = k
            if not (math.isfinite(fits[key]) and logc[-1] < logc[-2]) and ok:
                ok = False
                msg = f"sequence still increasing at n={grid.factorial_horizon} for B={B}, lambda={lam}"
    rep.set("factorial_bound_C", fits)
    rep.set("factorial_bound_argmax", argmax)
    # the fitted constant is already reached inside n <= factorial_nmax
    rep.set("factorial_stable_by_nmax", all(k < grid.factorial_nmax for k in argmax.values()))
    rep.check("factorial_bound_bound", ok, msg)
    if w.family == "gevrey":
        # the weight's own exponent is not admissible: omega is not o(t^a)
        own = factorial_sequence(conj, 2.0, 1.0, w.param, grid.factorial_nmax)
        rep.set("own_exponent_log_growth_B=2", float(own[-1] - own[grid.factorial_nmax // 2]))
    return rep


def tau_k(tau: float) -> int:
    """Minimal k >= 0 with |tau| + |1 - tau| <= 2^k."""
    v = abs(tau) + abs(1 - tau)
    k = 0
    while 2 ** k < v:
        k += 1
    return k


def verify_amplitude_inequalities(w: WeightFunction, trials: int = 1000, seed: int = 0, d: int = 2) -> Report:
    """Random-tuple checks of the two elementary inequalities used for amplitudes."""
    rng = np.random.default_rng(seed)
    rep = Report(f"elementary-inequalities[{w.spec}]")
    L = w.L
    first1 = first2 = None
    worst2 = 0.0
    for trial in range(trials):
        tau = float(rng.uniform(-3.0, 4.0))
        scale = 10.0 ** rng.uniform(-1, 3)
        x = rng.normal(size=d) * scale
        y = rng.normal(size=d) * scale
        k = tau_k(tau)
        lhs = float(w(np.linalg.norm(np.concatenate([x, y]))))
        rhs = (L ** 2 * float(w(np.linalg.norm((1 - tau) * x + tau * y)))
               + L ** (k + 2) * float(w(np.linalg.norm(y - x)))
               + sum(L ** j for j in range(1, k + 3)))
        if lhs > rhs * (1 + 1e-12) and first1 is None:
            first1 = (trial, tau, x.tolist(), y.tolist())

        v = rng.normal(size=d) * scale
        wv = rng.normal(size=d) * scale
        t = float(rng.uniform(0.0, 1.0))
        C = 2 * max((1 - tau) ** 2, tau ** 2)
        lhs2 = float(v @ v)
        a = v + t * tau * wv
        b = v - t * (1 - tau) * wv
        rhs2 = C * float(a @ a + b @ b)
        worst2 = max(worst2, lhs2 / rhs2 if rhs2 > 0 else math.inf)
        if lhs2 > rhs2 * (1 + 1e-12) and first2 is None:
            first2 = (trial, tau, t)
    rep.set("trials", trials)
    rep.set("seed", seed)
    rep.set("max_ratio_second", worst2)
    rep.check("weight_amplitude_inequality", first1 is None, f"violated at {first1}")
    rep.check("vector_inequality", first2 is None, f"violated at {first2}")
    return rep
