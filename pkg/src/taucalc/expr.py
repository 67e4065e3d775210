"""Closed-form symbols evaluated with truncated multivariate Taylor (jet) arithmetic."""
from __future__ import annotations

import ast
import cmath
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import multiindex as mi
from .exact import minus_i_power
from .symbols import SymbolError, _as_points, _check_kind, _index

MAX_JET_ORDER = 12
_FUNCS = ("exp", "log", "sqrt", "sin", "cos")
_CONSTS = {"pi": math.pi, "e": math.e, "I": 1j}


class ExprParseError(SymbolError):
    pass


# ---------------------------------------------------------------------------
# jet space: monomials of total degree <= K in nv variables

class JetSpace:
    def __init__(self, nv: int, K: int):
        self.nv = nv
        self.K = K
        self.monomials = list(mi.iterate_upto(K, nv))
        self.index = {m: i for i, m in enumerate(self.monomials)}
        I, J, T = [], [], []
        for i, a in enumerate(self.monomials):
            da = sum(a)
            for j, b in enumerate(self.monomials):
                if da + sum(b) <= K:
                    I.append(i)
                    J.append(j)
                    T.append(self.index[mi.add(a, b)])
        self.I = np.asarray(I)
        self.J = np.asarray(J)
        self.T = np.asarray(T)
        self.factorials = np.array([float(mi.factorial(m)) for m in self.monomials])
        self.size = len(self.monomials)


@lru_cache(maxsize=64)
def jet_space(nv: int, K: int) -> JetSpace:
    return JetSpace(nv, K)


class Jet:
    """Truncated Taylor expansion at P points; coefficients have shape (size, P)."""

    __slots__ = ("space", "c")

    def __init__(self, space: JetSpace, c: np.ndarray):
        self.space = space
        self.c = c

    @classmethod
    def constant(cls, space: JetSpace, value, npts: int) -> "Jet":
        c = np.zeros((space.size, npts), dtype=complex)
        c[0] = value
        return cls(space, c)

    @classmethod
    def variable(cls, space: JetSpace, k: int, values: np.ndarray) -> "Jet":
        c = np.zeros((space.size, values.shape[0]), dtype=complex)
        c[0] = values
        if space.K >= 1:
            c[space.index[mi.unit(space.nv, k)]] = 1.0
        return cls(space, c)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(self.space, other, self.c.shape[1])

    def __add__(self, other):
        return Jet(self.space, self.c + self._lift(other).c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __sub__(self, other):
        return Jet(self.space, self.c - self._lift(other).c)

    def __rsub__(self, other):
        return Jet(self.space, self._lift(other).c - self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c * other)
        s = self.space
        out = np.zeros_like(self.c)
        np.add.at(out, s.T, self.c[s.I] * other.c[s.J])
        return Jet(s, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.c / other)
        return self * other._compose("inv")

    def __rtruediv__(self, other):
        return self._compose("inv") * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self._compose("log"))._compose("exp")
        if isinstance(p, (int, np.integer)) or (isinstance(p, float) and p.is_integer() and abs(p) < 64):
            p = int(p)
            base = self if p >= 0 else self._compose("inv")
            out = Jet.constant(self.space, 1.0, self.c.shape[1])
            for _ in range(abs(p)):
                out = out * base
            return out
        return self._compose("pow", p)

    def _compose(self, name: str, p=None) -> "Jet":
        """f(g) = sum_n f^(n)(g0)/n! h^n with h = g - g0."""
        g0 = self.c[0]
        K = self.space.K
        if name == "exp":
            e0 = np.exp(g0)
            taylor = [e0 / math.factorial(n) for n in range(K + 1)]
        elif name == "log":
            taylor = [np.log(g0)] + [(-1) ** (n + 1) / (n * g0 ** n) for n in range(1, K + 1)]
        elif name == "inv":
            taylor = [(-1) ** n / g0 ** (n + 1) for n in range(K + 1)]
        elif name == "pow":
            taylor = []
            coef = 1.0
            for n in range(K + 1):
                taylor.append(coef * g0 ** (p - n))
                coef = coef * (p - n) / (n + 1)
        elif name in ("sin", "cos"):
            shift = 0 if name == "sin" else 1
            taylor = []
            for n in range(K + 1):
                k = (n + shift) % 4
                val = (np.sin(g0), np.cos(g0), -np.sin(g0), -np.cos(g0))[k]
                taylor.append(val / math.factorial(n))
        elif name == "sqrt":
            return self._compose("pow", 0.5)
        else:  # pragma: no cover - parser guards names
            raise ExprParseError(f"unsupported function {name}")
        h = Jet(self.space, self.c.copy())
        h.c[0] = 0.0
        out = Jet.constant(self.space, taylor[K], self.c.shape[1])
        for n in range(K - 1, -1, -1):
            out = out * h
            out.c[0] += taylor[n]
        return out

    def derivative(self, index: Sequence[int]) -> np.ndarray:
        k = self.space.index[tuple(index)]
        return self.c[k] * self.space.factorials[k]


# ---------------------------------------------------------------------------
# parsing

def variable_names(dim: int) -> dict[str, int]:
    names: dict[str, int] = {}
    for i in range(dim):
        names[f"x{i + 1}"] = i
        names[f"xi{i + 1}"] = dim + i
    if dim == 1:
        names.update({"x": 0, "xi": 1})
    if dim == 2:
        names.update({"x": 0, "y": 1, "xi": 2, "eta": 3})
    return names


def parse_expression(text: str, dim: int):
    """Parse into a nested-tuple tree; anything outside the grammar is rejected."""
    names = variable_names(dim)
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExprParseError(f"cannot parse expression {text!r}: {exc.msg}") from exc

    def conv(node):
        if isinstance(node, ast.Expression):
            return conv(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
                and not isinstance(node.value, bool):
            return ("num", node.value)
        if isinstance(node, ast.Name):
            if node.id in names:
                return ("var", names[node.id])
            if node.id in _CONSTS:
                return ("num", _CONSTS[node.id])
            raise ExprParseError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = conv(node.operand)
            return ("neg", inner) if isinstance(node.op, ast.USub) else inner
        if isinstance(node, ast.BinOp):
            ops = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div", ast.Pow: "pow"}
            kind = ops.get(type(node.op))
            if kind is None:
                raise ExprParseError(f"operator {type(node.op).__name__} not supported in {text!r}")
            return (kind, conv(node.left), conv(node.right))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise ExprParseError(f"{node.func.id} takes exactly one argument")
            return ("call", node.func.id, conv(node.args[0]))
        raise ExprParseError(f"unsupported syntax {type(node).__name__} in {text!r}")

    return conv(tree)


_NP_FUNCS = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos}


def _eval_tree(node, leaves, backend: str):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return leaves[node[1]]
    if kind == "neg":
        return -_eval_tree(node[1], leaves, backend)
    if kind == "call":
        arg = _eval_tree(node[2], leaves, backend)
        if backend == "jet" and isinstance(arg, Jet):
            return arg._compose(node[1])
        if isinstance(arg, np.ndarray):
            return _NP_FUNCS[node[1]](arg)
        return getattr(cmath, node[1])(arg)
    left = _eval_tree(node[1], leaves, backend)
    right = _eval_tree(node[2], leaves, backend)
    if kind == "add":
        return left + right
    if kind == "sub":
        return left - right
    if kind == "mul":
        return left * right
    if kind == "div":
        return left / right
    if kind == "pow":
        if isinstance(left, Jet):
            return left ** right
        if isinstance(right, Jet):
            return (right * Jet.constant(right.space, cmath.log(left), right.c.shape[1]))._compose("exp")
        return left ** right
    raise ExprParseError(f"bad node {kind}")  # pragma: no cover


class ExprSymbol:
    """Closed-form symbol with optional pending derivative (shift) and factor."""

    def __init__(self, dim: int, expr: str, shift: Sequence[int] | None = None, factor: complex = 1.0):
        self.dim = dim
        self.expr = expr
        self.tree = parse_expression(expr, dim)
        self.shift = tuple(shift) if shift is not None else (0,) * (2 * dim)
        if len(self.shift) != 2 * dim:
            raise SymbolError("derivative shift must have length 2d")
        self.factor = complex(factor)

    def __repr__(self):
        extra = "" if not any(self.shift) else f", shift={self.shift}"
        return f"ExprSymbol({self.dim}, {self.expr!r}{extra})"

    def derive(self, dx=None, dxi=None, kind: str = "partial") -> "ExprSymbol":
        _check_kind(kind)
        dx = _index(dx, self.dim)
        dxi = _index(dxi, self.dim)
        shift = mi.add(self.shift, dx + dxi)
        factor = self.factor
        if kind == "D":
            factor *= complex(minus_i_power(mi.norm(dx) + mi.norm(dxi)))
        return ExprSymbol(self.dim, self.expr, shift, factor)

    def evaluate(self, x, xi) -> np.ndarray:
        X = _as_points(x, self.dim)
        XI = _as_points(xi, self.dim)
        X, XI = np.broadcast_arrays(X, XI)
        if not any(self.shift):
            leaves = [X[..., i].astype(complex) for i in range(self.dim)] + \
                     [XI[..., i].astype(complex) for i in range(self.dim)]
            val = _eval_tree(self.tree, leaves, "np")
            return self.factor * np.broadcast_to(np.asarray(val, dtype=complex), X.shape[:-1]).copy()
        base = ExprSymbol(self.dim, self.expr)
        table = jet_eval(base, X, XI, sum(self.shift))
        key = (self.shift[:self.dim], self.shift[self.dim:])
        return self.factor * table[key]

    __call__ = evaluate


def jet_eval(a: ExprSymbol, x, xi, K: int) -> dict[tuple, np.ndarray]:
    """All mixed partials d_x^alpha d_xi^beta a with |alpha+beta| <= K.

    Keys are (alpha, beta); values have the broadcast shape of the points.
    Pending derivatives on ``a`` are honoured by reading higher coefficients.
    """
    if K > MAX_JET_ORDER:
        raise SymbolError(f"jet order {K} exceeds the cost guard {MAX_JET_ORDER}")
    d = a.dim
    X = _as_points(x, d)
    XI = _as_points(xi, d)
    X, XI = np.broadcast_arrays(X, XI)
    shape = X.shape[:-1]
    pts = np.concatenate([X.reshape(-1, d), XI.reshape(-1, d)], axis=1)
    total = K + sum(a.shift)
    space = jet_space(2 * d, total)
    npts = pts.shape[0]
    chunk = max(1, int(4e6 // max(len(space.T), 1)))
    out: dict[tuple, np.ndarray] = {}
    wanted = list(mi.iterate_upto(K, 2 * d))
    for key in wanted:
        out[(key[:d], key[d:])] = np.empty(npts, dtype=complex)
    for start in range(0, npts, chunk):
        sl = slice(start, min(npts, start + chunk))
        leaves = [Jet.variable(space, k, pts[sl, k].astype(complex)) for k in range(2 * d)]
        val = _eval_tree(a.tree, leaves, "jet")
        if not isinstance(val, Jet):
            val = Jet.constant(space, val, sl.stop - sl.start)
        for key in wanted:
            out[(key[:d], key[d:])][sl] = val.derivative(mi.add(key, a.shift))
    return {k: a.factor * v.reshape(shape) for k, v in out.items()}
