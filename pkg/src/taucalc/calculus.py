"""Exact tau-quantization calculus on polynomial symbols.

Conventions: Op_tau(a) u(x) = (2 pi)^{-d} iint e^{i(x-y) xi} a((1-tau)x + tau y, xi) u(y) dy dxi,
so at tau = 0 the symbol x^alpha xi^beta is the operator x^alpha D^beta with
D = -i d/dx.  Under the ``two_pi`` convention (no Fourier normalization in the
operator) composition outputs carry an extra factor (2 pi)^d; quantization
changes and transposes are the same in both conventions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

from . import multiindex as mi
from .exact import QI, minus_i_power, parse_tau
from .report import Report
from .symbols import PolySymbol, RationalSymbol, SymbolError

CONVENTIONS = ("normalized", "two_pi")


class ConventionError(SymbolError):
    pass


@dataclass(frozen=True)
class TauParams:
    """tau together with its exponent k, minimal with |tau| + |1 - tau| <= 2^k."""

    tau: Fraction | float

    def __post_init__(self):
        object.__setattr__(self, "tau", parse_tau(self.tau))

    @property
    def k(self) -> int:
        v = abs(self.tau) + abs(1 - self.tau)
        k = 0
        while 2 ** k < v:
            k += 1
        return k

    def m_prime(self, m: float, L: float) -> float:
        return m * L ** self.k


def _tau(t) -> Fraction | float:
    if isinstance(t, TauParams):
        return t.tau
    return parse_tau(t)


# ---------------------------------------------------------------------------
# quantization change and transpose

def _shift_expand(a: PolySymbol, delta) -> PolySymbol:
    """sum_alpha delta^|alpha| / alpha! * d_xi^alpha D_x^alpha a, monomial by monomial."""
    if delta == 0:
        return a
    out: dict = {}
    for (A, B), c in a.terms.items():
        top = mi.minimum(A, B)
        for al in mi.box(top):
            n = mi.norm(al)
            f = Fraction(mi.falling(A, al) * mi.falling(B, al), mi.factorial(al))
            coef = c * minus_i_power(n) * f * delta ** n
            key = (mi.sub(A, al), mi.sub(B, al))
            out[key] = out[key] + coef if key in out else coef
    return PolySymbol._trusted(a.dim, out)


def change_quantization(a: PolySymbol, tau_from, tau_to) -> PolySymbol:
    """tau_from-symbol to tau_to-symbol of the same operator (exact)."""
    return _shift_expand(a, _tau(tau_from) - _tau(tau_to))


def transpose_symbol(a: PolySymbol, tau) -> PolySymbol:
    """tau-symbol of the transpose: sum (1-2tau)^|alpha|/alpha! d_xi^alpha D_x^alpha a(x,-xi)."""
    t = _tau(tau)
    return _shift_expand(a.reflect_xi(), 1 - 2 * t)


# ---------------------------------------------------------------------------
# same-tau composition

def _bound(sym, which: str):
    """Per-axis derivative bounds; None when derivatives never vanish."""
    if isinstance(sym, PolySymbol):
        return sym.x_degrees if which == "x" else sym.xi_degrees
    return None


def _cap(u, v, d: int, order: int):
    if u is None and v is None:
        return (order,) * d
    if u is None:
        return v
    if v is None:
        return u
    return mi.minimum(u, v)


class _DerivCache:
    def __init__(self, sym):
        self.sym = sym
        self.cache: dict = {}

    def __call__(self, dx, dxi):
        key = (dx, dxi)
        if key not in self.cache:
            der = self.sym.derive(dx, dxi)
            # D acts on x only
            self.cache[key] = der.scale(minus_i_power(mi.norm(dx))) if any(dx) else der
        return self.cache[key]


def composition_terms(a, b, coefficient: Callable[[tuple, tuple], object],
                      max_order: int | None = None) -> Iterator[tuple[int, object]]:
    """Yield (j, term) with term = coef(beta, gamma) * (d_xi^gamma D_x^beta a)(d_xi^beta D_x^gamma b).

    j = |beta + gamma|.  Enumeration is graded and stops when the degree
    bounds make every derivative vanish, or at ``max_order``.
    """
    d = a.dim
    bb = _cap(_bound(a, "x"), _bound(b, "xi"), d, max_order or 0)
    gb = _cap(_bound(a, "xi"), _bound(b, "x"), d, max_order or 0)
    if _bound(a, "x") is None and _bound(b, "xi") is None and max_order is None:
        raise SymbolError("composition of two non-polynomial symbols needs max_order")
    top = mi.norm(bb) + mi.norm(gb)
    if max_order is not None:
        top = min(top, max_order)
    da = _DerivCache(a)
    db = _DerivCache(b)
    for j in range(top + 1):
        for nb in range(j + 1):
            for beta in mi.of_norm(nb, d):
                if not mi.leq(beta, bb):
                    continue
                for gamma in mi.of_norm(j - nb, d):
                    if not mi.leq(gamma, gb):
                        continue
                    coef = coefficient(beta, gamma)
                    if coef == 0:
                        continue
                    left = da(beta, gamma)
                    if left.is_zero():
                        continue
                    right = db(gamma, beta)
                    if right.is_zero():
                        continue
                    yield j, (left * right).scale(coef)


def tau_coefficient(tau) -> Callable[[tuple, tuple], object]:
    t = _tau(tau)

    def coef(beta, gamma):
        nb, ng = mi.norm(beta), mi.norm(gamma)
        sign = -1 if nb % 2 else 1
        return Fraction(sign, mi.factorial(beta) * mi.factorial(gamma)) * t ** nb * (1 - t) ** ng

    return coef


def weyl_coefficient(beta, gamma):
    nb, ng = mi.norm(beta), mi.norm(gamma)
    sign = -1 if nb % 2 else 1
    return Fraction(sign, mi.factorial(beta) * mi.factorial(gamma) * 2 ** (nb + ng))


def _sum_terms(terms, zero):
    acc = zero
    for _, t in terms:
        acc = acc + t
    return acc


def _apply_convention(c, convention: str, d: int):
    if convention not in CONVENTIONS:
        raise ConventionError(f"unknown convention {convention!r}")
    if convention == "two_pi":
        return c.scale((2 * math.pi) ** d)
    return c


def _zero_like(a, b):
    if isinstance(a, RationalSymbol):
        return RationalSymbol(PolySymbol.zero(a.dim), a.base)
    if isinstance(b, RationalSymbol):
        return RationalSymbol(PolySymbol.zero(b.dim), b.base)
    return PolySymbol.zero(a.dim)


def compose_tau(a, b, tau, convention: str = "normalized", max_order: int | None = None):
    """tau-symbol of Op_tau(a) Op_tau(b), exact for polynomial inputs."""
    if a.dim != b.dim:
        raise SymbolError("dimension mismatch")
    c = _sum_terms(composition_terms(a, b, tau_coefficient(tau), max_order), _zero_like(a, b))
    return _apply_convention(c, convention, a.dim)


def weyl_compose(a, b, convention: str = "normalized"):
    """Weyl-symbol composition with weights 2^{-|beta+gamma|}."""
    if a.dim != b.dim:
        raise SymbolError("dimension mismatch")
    c = _sum_terms(composition_terms(a, b, weyl_coefficient), _zero_like(a, b))
    return _apply_convention(c, convention, a.dim)


# ---------------------------------------------------------------------------
# composition across quantizations

def general_coefficient(alpha, beta, gamma, delta, tau, tau1, tau2):
    """Coefficient of (d_xi^gamma D_x^alpha a)(d_xi^delta D_x^beta b) in the mixed composition."""
    s = alpha
    total = mi.add(alpha, beta)
    acc = 0
    for a1 in mi.box(mi.minimum(alpha, gamma)):
        for a2 in mi.box(mi.minimum(beta, delta)):
            sign = -1 if (mi.norm(alpha) - mi.norm(a1) + mi.norm(a2)) % 2 else 1
            comb = (mi.binomial(mi.sub(total, mi.add(a1, a2)), mi.sub(s, a1))
                    * mi.binomial(gamma, a1) * mi.binomial(delta, a2))
            acc += (sign * comb
                    * tau ** (mi.norm(alpha) - mi.norm(a1))
                    * (1 - tau) ** (mi.norm(beta) - mi.norm(a2))
                    * tau1 ** mi.norm(a1)
                    * (1 - tau2) ** mi.norm(a2))
    return acc / (mi.factorial(gamma) * mi.factorial(delta))


def compose_general(a: PolySymbol, tau1, b: PolySymbol, tau2, tau, convention: str = "normalized") -> PolySymbol:
    """tau-symbol of Op_tau1(a) Op_tau2(b) via the six-index double sum."""
    if a.dim != b.dim:
        raise SymbolError("dimension mismatch")
    t, t1, t2 = _tau(tau), _tau(tau1), _tau(tau2)
    d = a.dim
    da = _DerivCache(a)
    db = _DerivCache(b)
    acc = PolySymbol.zero(d)
    for alpha in mi.box(a.x_degrees):
        for gamma in mi.box(a.xi_degrees):
            left = da(alpha, gamma)
            if left.is_zero():
                continue
            for beta in mi.box(b.x_degrees):
                delta = tuple(al + be - ga for al, be, ga in zip(alpha, beta, gamma))
                if any(v < 0 for v in delta) or not mi.leq(delta, b.xi_degrees):
                    continue
                right = db(beta, delta)
                if right.is_zero():
                    continue
                coef = general_coefficient(alpha, beta, gamma, delta, t, t1, t2)
                if coef == 0:
                    continue
                acc = acc + (left * right).scale(coef)
    return _apply_convention(acc, convention, d)


# ---------------------------------------------------------------------------
# quantized symbols with explicit tau and convention

@dataclass(frozen=True)
class QuantizedSymbol:
    symbol: PolySymbol
    tau: TauParams
    convention: str = "normalized"

    def __post_init__(self):
        if not isinstance(self.tau, TauParams):
            object.__setattr__(self, "tau", TauParams(self.tau))
        if self.convention not in CONVENTIONS:
            raise ConventionError(f"unknown convention {self.convention!r}")

    def to_tau(self, tau) -> "QuantizedSymbol":
        t = TauParams(_tau(tau))
        return QuantizedSymbol(change_quantization(self.symbol, self.tau.tau, t.tau), t, self.convention)

    def transpose(self) -> "QuantizedSymbol":
        return QuantizedSymbol(transpose_symbol(self.symbol, self.tau.tau), self.tau, self.convention)

    def _same_convention(self, other: "QuantizedSymbol") -> None:
        if self.convention != other.convention:
            raise ConventionError(f"mixed conventions {self.convention} and {other.convention}")

    def compose(self, other: "QuantizedSymbol", target=None) -> "QuantizedSymbol":
        self._same_convention(other)
        if target is None and self.tau.tau == other.tau.tau:
            c = compose_tau(self.symbol, other.symbol, self.tau.tau, self.convention)
            return QuantizedSymbol(c, self.tau, self.convention)
        t = TauParams(_tau(target if target is not None else self.tau.tau))
        c = compose_general(self.symbol, self.tau.tau, other.symbol, other.tau.tau, t.tau, self.convention)
        return QuantizedSymbol(c, t, self.convention)

    def __matmul__(self, other):
        return self.compose(other)


# ---------------------------------------------------------------------------
# combinatorial identities

def combinatorial_identity_check(max_mnr: int = 12, max_dim: int = 3, max_order: int = 6) -> Report:
    """Exact sweeps of Vandermonde's identity and the four-factorial identity."""
    rep = Report("combinatorial-identities")
    count = 0
    first = None
    for m in range(max_mnr + 1):
        for n in range(max_mnr + 1):
            for r in range(max_mnr + 1):
                lhs = sum(math.comb(m, k) * math.comb(n, r - k) for k in range(r + 1))
                count += 1
                if lhs != math.comb(m + n, r) and first is None:
                    first = (m, n, r, lhs, math.comb(m + n, r))
    rep.set("vandermonde_cases", count)
    rep.check("vandermonde", first is None, f"counterexample (m,n,r,lhs,rhs)={first}")

    count = 0
    first = None
    for d in range(1, max_dim + 1):
        for total in range(max_order + 1):
            for s in mi.of_norm(total, 2 * d):
                beta, gamma = s[:d], s[d:]
                bg = mi.add(beta, gamma)
                for eps in mi.box(bg):
                    lhs = Fraction(mi.factorial(bg), mi.factorial(mi.sub(bg, eps)) * mi.factorial(eps)
                                   * mi.factorial(beta) * mi.factorial(gamma))
                    rhs = _four_factorial_rhs(beta, gamma, eps)
                    count += 1
                    if lhs != rhs and first is None:
                        first = (beta, gamma, eps, lhs, rhs)
    rep.set("four_factorial_cases", count)
    rep.check("four_factorial", first is None, f"counterexample (beta,gamma,eps,lhs,rhs)={first}")
    return rep


def _four_factorial_rhs(beta, gamma, eps) -> Fraction:
    """Sum over delta with 0 <= delta <= beta and beta-eps <= delta <= beta-eps+gamma."""
    d = len(beta)
    lo = tuple(max(0, b - e) for b, e in zip(beta, eps))
    hi = tuple(min(b, b - e + g) for b, e, g in zip(beta, eps, gamma))
    if any(l > h for l, h in zip(lo, hi)):
        return Fraction(0)
    acc = Fraction(0)
    for delta in mi.box(tuple(h - l for l, h in zip(lo, hi))):
        delta = mi.add(delta, lo)
        den = 1
        for i in range(d):
            den *= (math.factorial(beta[i] - delta[i]) * math.factorial(beta[i] - eps[i] + gamma[i] - delta[i])
                    * math.factorial(delta[i]) * math.factorial(delta[i] - beta[i] + eps[i]))
        acc += Fraction(1, den)
    return acc
