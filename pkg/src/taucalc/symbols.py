"""Sparse polynomial symbols, rational symbols P/p^k and polynomial amplitudes.

A symbol in d dimensions is a function of (x, xi) in R^d x R^d.  Monomials
are keyed by a pair of multi-indices ``(alpha, beta)`` standing for
``x^alpha xi^beta``.  Coefficients are exact :class:`~taucalc.exact.QI`
values unless a float enters, after which the symbol is in float mode.
"""
from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import multiindex as mi
from .exact import QI, is_exact, minus_i_power, to_coeff

Key = tuple[tuple[int, ...], tuple[int, ...]]


class SymbolError(ValueError):
    pass


def _check_kind(kind: str) -> None:
    if kind not in ("partial", "D"):
        raise SymbolError(f"derivative kind must be 'partial' or 'D', got {kind!r}")


def _index(v, d: int) -> tuple[int, ...]:
    if v is None:
        return (0,) * d
    t = tuple(int(k) for k in v)
    if len(t) != d or any(k < 0 for k in t):
        raise SymbolError(f"multi-index {v!r} invalid for dimension {d}")
    return t


def _as_points(v, d: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if d == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.shape[-1] != d:
        raise SymbolError(f"point arrays need trailing dimension {d}, got {arr.shape}")
    return arr


class PolySymbol:
    """Polynomial symbol sum c * x^alpha * xi^beta."""

    __slots__ = ("dim", "terms", "__dict__")

    def __init__(self, dim: int, terms: Mapping[Key, object] | None = None, *, exact_floats: bool = False):
        if dim < 1:
            raise SymbolError("dimension must be positive")
        self.dim = dim
        clean: dict[Key, object] = {}
        for (a, b), c in (terms or {}).items():
            key = (_index(a, dim), _index(b, dim))
            c = to_coeff(c, exact=exact_floats)
            if c == 0:
                continue
            prev = clean.get(key)
            c = c if prev is None else prev + c
            if c == 0:
                clean.pop(key, None)
            else:
                clean[key] = c
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def _trusted(cls, dim: int, terms: dict[Key, object]) -> "PolySymbol":
        obj = object.__new__(cls)
        obj.dim = dim
        obj.terms = dict(sorted((k, c) for k, c in terms.items() if c != 0))
        return obj

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "PolySymbol":
        return cls._trusted(dim, {})

    @classmethod
    def constant(cls, dim: int, c=1) -> "PolySymbol":
        z = (0,) * dim
        return cls(dim, {(z, z): c})

    @classmethod
    def x(cls, dim: int, i: int = 0) -> "PolySymbol":
        return cls(dim, {(mi.unit(dim, i), mi.zero(dim)): 1})

    @classmethod
    def xi(cls, dim: int, i: int = 0) -> "PolySymbol":
        return cls(dim, {(mi.zero(dim), mi.unit(dim, i)): 1})

    @classmethod
    def monomial(cls, alpha: Sequence[int], beta: Sequence[int], c=1) -> "PolySymbol":
        return cls(len(alpha), {(tuple(alpha), tuple(beta)): c})

    # structure ---------------------------------------------------------------
    @cached_property
    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.terms.values())

    def is_zero(self) -> bool:
        return not self.terms

    @cached_property
    def degree(self) -> int:
        return max((mi.norm(a) + mi.norm(b) for a, b in self.terms), default=0)

    @cached_property
    def x_degrees(self) -> tuple[int, ...]:
        out = (0,) * self.dim
        for a, _ in self.terms:
            out = mi.maximum(out, a)
        return out

    @cached_property
    def xi_degrees(self) -> tuple[int, ...]:
        out = (0,) * self.dim
        for _, b in self.terms:
            out = mi.maximum(out, b)
        return out

    def constant_term(self):
        z = (0,) * self.dim
        return self.terms.get((z, z), QI(0))

    def to_float(self) -> "PolySymbol":
        return PolySymbol._trusted(self.dim, {k: complex(c) for k, c in self.terms.items()})

    # arithmetic -----------------------------------------------------------
    def _check_dim(self, other: "PolySymbol") -> None:
        if other.dim != self.dim:
            raise SymbolError(f"dimension mismatch {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, PolySymbol):
            self._check_dim(other)
            out = dict(self.terms)
            for k, c in other.terms.items():
                out[k] = out[k] + c if k in out else c
            return PolySymbol._trusted(self.dim, out)
        if isinstance(other, (int, Fraction, QI, float, complex)):
            return self + PolySymbol.constant(self.dim, other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol._trusted(self.dim, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (PolySymbol, int, Fraction, QI, float, complex)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "PolySymbol":
        c = to_coeff(c, exact=not isinstance(c, (float, complex)))
        if c == 0:
            return PolySymbol.zero(self.dim)
        return PolySymbol._trusted(self.dim, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, PolySymbol):
            self._check_dim(other)
            out: dict[Key, object] = {}
            for (a1, b1), c1 in self.terms.items():
                for (a2, b2), c2 in other.terms.items():
                    k = (mi.add(a1, a2), mi.add(b1, b2))
                    v = c1 * c2
                    out[k] = out[k] + v if k in out else v
            return PolySymbol._trusted(self.dim, out)
        if isinstance(other, (int, Fraction, QI, float, complex)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, QI, float, complex)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int) -> "PolySymbol":
        if n < 0:
            raise SymbolError("negative powers of a polynomial symbol are rational symbols")
        out = PolySymbol.constant(self.dim, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, PolySymbol):
            return self.dim == other.dim and self.terms == other.terms
        if isinstance(other, RationalSymbol):
            return other == self
        if isinstance(other, (int, Fraction, QI, float, complex)):
            return self == PolySymbol.constant(self.dim, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.dim, tuple(self.terms.items())))

    def allclose(self, other: "PolySymbol", tol: float = 1e-12) -> bool:
        diff = self - other
        scale = max([abs(complex(c)) for c in self.terms.values()] + [1.0])
        return all(abs(complex(c)) <= tol * scale for c in diff.terms.values())

    # calculus -------------------------------------------------------------
    def derive(self, dx=None, dxi=None, kind: str = "partial") -> "PolySymbol":
        """Mixed derivative d_x^dx d_xi^dxi, or with D = -i d when kind='D'."""
        _check_kind(kind)
        dx = _index(dx, self.dim)
        dxi = _index(dxi, self.dim)
        out: dict[Key, object] = {}
        for (a, b), c in self.terms.items():
            f = mi.falling(a, dx) * mi.falling(b, dxi)
            if f == 0:
                continue
            out[(mi.sub(a, dx), mi.sub(b, dxi))] = c * f
        res = PolySymbol._trusted(self.dim, out)
        if kind == "D":
            res = res.scale(minus_i_power(mi.norm(dx) + mi.norm(dxi)))
        return res

    def reflect_xi(self) -> "PolySymbol":
        """The symbol (x, xi) -> a(x, -xi)."""
        return PolySymbol._trusted(
            self.dim, {(a, b): (-c if mi.norm(b) % 2 else c) for (a, b), c in self.terms.items()}
        )

    # evaluation -----------------------------------------------------------
    def evaluate(self, x, xi) -> np.ndarray:
        """Vectorized float evaluation; x and xi have trailing axis d."""
        X = _as_points(x, self.dim)
        XI = _as_points(xi, self.dim)
        X, XI = np.broadcast_arrays(X, XI)
        out = np.zeros(X.shape[:-1], dtype=complex)
        if not self.terms:
            return out
        px = _power_table(X, self.x_degrees)
        pxi = _power_table(XI, self.xi_degrees)
        for (a, b), c in self.terms.items():
            mon = np.ones(X.shape[:-1])
            for i in range(self.dim):
                if a[i]:
                    mon = mon * px[i][a[i]]
                if b[i]:
                    mon = mon * pxi[i][b[i]]
            out += complex(c) * mon
        return out

    def __call__(self, x, xi) -> np.ndarray:
        return self.evaluate(x, xi)

    def evaluate_exact(self, x: Sequence, xi: Sequence):
        """Exact value at a rational point."""
        x = [Fraction(v) for v in x]
        xi = [Fraction(v) for v in xi]
        total = QI(0)
        for (a, b), c in self.terms.items():
            mon = Fraction(1)
            for i in range(self.dim):
                mon *= x[i] ** a[i] * xi[i] ** b[i]
            total = total + c * mon
        return total

    # display --------------------------------------------------------------
    def __repr__(self):
        return f"PolySymbol({self.dim}, {self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, b), c in self.terms.items():
            mon = _monomial_str(a, b, self.dim)
            parts.append(f"{c}" if not mon else f"{c}*{mon}")
        return " + ".join(parts)


def _power_table(arr: np.ndarray, degs: Sequence[int]) -> list[list[np.ndarray]]:
    table = []
    for i, deg in enumerate(degs):
        col = arr[..., i]
        pw = [np.ones_like(col)]
        for _ in range(deg):
            pw.append(pw[-1] * col)
        table.append(pw)
    return table


def _monomial_str(a, b, d: int) -> str:
    names = []
    for i in range(d):
        sx = "x" if d == 1 else f"x{i + 1}"
        sxi = "xi" if d == 1 else f"xi{i + 1}"
        if a[i]:
            names.append(sx if a[i] == 1 else f"{sx}^{a[i]}")
        if b[i]:
            names.append(sxi if b[i] == 1 else f"{sxi}^{b[i]}")
    return "*".join(names)


class RationalSymbol:
    """Symbol numerator / base**power with a fixed polynomial base.

    The class is closed under differentiation and under the ring
    operations among symbols sharing the same base, which is all the
    parametrix recursion needs.
    """

    __slots__ = ("numerator", "base", "power", "__dict__")

    def __init__(self, numerator: PolySymbol, base: PolySymbol, power: int = 0):
        if base.is_zero():
            raise SymbolError("rational symbol base must be a nonzero polynomial")
        if numerator.dim != base.dim:
            raise SymbolError("numerator and base dimensions differ")
        if power < 0:
            raise SymbolError("power must be nonnegative")
        self.numerator = numerator
        self.base = base
        self.power = int(power) if not numerator.is_zero() else 0

    @property
    def dim(self) -> int:
        return self.base.dim

    @classmethod
    def inverse(cls, base: PolySymbol) -> "RationalSymbol":
        return cls(PolySymbol.constant(base.dim, 1), base, 1)

    @classmethod
    def from_poly(cls, poly: PolySymbol, base: PolySymbol) -> "RationalSymbol":
        return cls(poly, base, 0)

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    @property
    def is_exact(self) -> bool:
        return self.numerator.is_exact and self.base.is_exact

    def _base_power(self, k: int) -> PolySymbol:
        cache = self.base.__dict__.setdefault("_power_cache", {0: PolySymbol.constant(self.dim, 1)})
        if k not in cache:
            top = max(cache)
            acc = cache[top]
            for j in range(top + 1, k + 1):
                acc = acc * self.base
                cache[j] = acc
        return cache[k]

    def _coerce(self, other) -> "RationalSymbol":
        if isinstance(other, RationalSymbol):
            if other.base != self.base:
                raise SymbolError("rational symbols with different bases cannot be combined")
            return other
        if isinstance(other, PolySymbol):
            return RationalSymbol(other, self.base, 0)
        if isinstance(other, (int, Fraction, QI, float, complex)):
            return RationalSymbol(PolySymbol.constant(self.dim, other), self.base, 0)
        raise TypeError(f"cannot combine RationalSymbol with {type(other).__name__}")

    def with_power(self, k: int) -> PolySymbol:
        """Numerator after raising the denominator to base**k (k >= power)."""
        if k < self.power:
            raise SymbolError("cannot lower the denominator power")
        if k == self.power:
            return self.numerator
        return self.numerator * self._base_power(k - self.power)

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        if o.is_zero():
            return self
        if self.is_zero():
            return o
        k = max(self.power, o.power)
        return RationalSymbol(self.with_power(k) + o.with_power(k), self.base, k)

    __radd__ = __add__

    def __neg__(self):
        return RationalSymbol(-self.numerator, self.base, self.power)

    def __sub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return RationalSymbol(self.numerator * o.numerator, self.base, self.power + o.power)

    __rmul__ = __mul__

    def scale(self, c) -> "RationalSymbol":
        return RationalSymbol(self.numerator.scale(c), self.base, self.power)

    def __eq__(self, other):
        if isinstance(other, (RationalSymbol, PolySymbol, int, Fraction, QI, float, complex)):
            try:
                o = self._coerce(other)
            except SymbolError:
                return False
            k = max(self.power, o.power)
            return self.with_power(k) == o.with_power(k)
        return NotImplemented

    def __hash__(self):
        return hash((self.numerator, self.power))

    def derive(self, dx=None, dxi=None, kind: str = "partial") -> "RationalSymbol":
        """Quotient rule, applied one first-order derivative at a time."""
        _check_kind(kind)
        d = self.dim
        dx = _index(dx, d)
        dxi = _index(dxi, d)
        cur = self
        for i in range(d):
            for _ in range(dx[i]):
                cur = cur._first(mi.unit(d, i), mi.zero(d))
            for _ in range(dxi[i]):
                cur = cur._first(mi.zero(d), mi.unit(d, i))
        if kind == "D":
            cur = cur.scale(minus_i_power(mi.norm(dx) + mi.norm(dxi)))
        return cur

    def _first(self, ex, exi) -> "RationalSymbol":
        if self.is_zero():
            return self
        dP = self.numerator.derive(ex, exi)
        if self.power == 0:
            return RationalSymbol(dP, self.base, 0)
        dp = self.base.derive(ex, exi)
        num = dP * self.base - self.numerator * dp * self.power
        return RationalSymbol(num, self.base, self.power + 1)

    def evaluate(self, x, xi) -> np.ndarray:
        num = self.numerator.evaluate(x, xi)
        if self.power == 0:
            return num
        return num / self.base.evaluate(x, xi) ** self.power

    __call__ = evaluate

    def evaluate_exact(self, x, xi):
        num = self.numerator.evaluate_exact(x, xi)
        if self.power == 0:
            return num
        den = self.base.evaluate_exact(x, xi)
        if den == 0:
            raise ZeroDivisionError(f"base vanishes at x={list(x)}, xi={list(xi)}")
        return num / den ** self.power

    def __repr__(self):
        return f"RationalSymbol(({self.numerator}) / ({self.base})^{self.power})"


class PolyAmplitude:
    """Polynomial amplitude sum c * x^alpha * y^beta * xi^gamma."""

    def __init__(self, dim: int, terms: Mapping[tuple, object] | None = None):
        self.dim = dim
        clean: dict[tuple, object] = {}
        for (a, b, g), c in (terms or {}).items():
            key = (_index(a, dim), _index(b, dim), _index(g, dim))
            c = to_coeff(c, exact=False)
            if c == 0:
                continue
            clean[key] = clean[key] + c if key in clean else c
        self.terms = dict(sorted((k, c) for k, c in clean.items() if c != 0))

    @classmethod
    def from_symbol(cls, a: PolySymbol) -> "PolyAmplitude":
        z = (0,) * a.dim
        return cls(a.dim, {(al, z, be): c for (al, be), c in a.terms.items()})

    @property
    def y_degrees(self) -> tuple[int, ...]:
        out = (0,) * self.dim
        for _, b, _ in self.terms:
            out = mi.maximum(out, b)
        return out

    @property
    def x_degrees(self) -> tuple[int, ...]:
        out = (0,) * self.dim
        for a, _, _ in self.terms:
            out = mi.maximum(out, a)
        return out

    @property
    def xi_degrees(self) -> tuple[int, ...]:
        out = (0,) * self.dim
        for _, _, g in self.terms:
            out = mi.maximum(out, g)
        return out

    def derive(self, dx=None, dy=None, dxi=None, kind: str = "partial") -> "PolyAmplitude":
        _check_kind(kind)
        d = self.dim
        dx, dy, dxi = _index(dx, d), _index(dy, d), _index(dxi, d)
        out = {}
        for (a, b, g), c in self.terms.items():
            f = mi.falling(a, dx) * mi.falling(b, dy) * mi.falling(g, dxi)
            if f:
                out[(mi.sub(a, dx), mi.sub(b, dy), mi.sub(g, dxi))] = c * f
        res = PolyAmplitude(d, out)
        if kind == "D":
            k = minus_i_power(mi.norm(dx) + mi.norm(dy) + mi.norm(dxi))
            res = PolyAmplitude(d, {key: c * k for key, c in res.terms.items()})
        return res

    def restrict_diagonal(self) -> PolySymbol:
        """Set y = x, giving a polynomial symbol in (x, xi)."""
        out: dict[Key, object] = {}
        for (a, b, g), c in self.terms.items():
            k = (mi.add(a, b), g)
            out[k] = out[k] + c if k in out else c
        return PolySymbol._trusted(self.dim, out)

    def __eq__(self, other):
        return isinstance(other, PolyAmplitude) and self.dim == other.dim and self.terms == other.terms

    def __repr__(self):
        return f"PolyAmplitude({self.dim}, {self.terms})"


def poly_from_terms(dim: int, items: Iterable[tuple[Sequence[int], Sequence[int], object]]) -> PolySymbol:
    return PolySymbol(dim, {(tuple(a), tuple(b)): c for a, b, c in items})
