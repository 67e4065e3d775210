"""Multi-index combinatorics on tuples of nonnegative integers."""
from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence

MultiIndex = tuple[int, ...]


class MultiIndexError(ValueError):
    pass


def norm(a: Sequence[int]) -> int:
    return sum(a)


def factorial(a: Sequence[int]) -> int:
    out = 1
    for k in a:
        out *= math.factorial(k)
    return out


def leq(b: Sequence[int], a: Sequence[int]) -> bool:
    return all(bi <= ai for bi, ai in zip(b, a))


def add(a: Sequence[int], b: Sequence[int]) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Sequence[int], b: Sequence[int]) -> MultiIndex:
    out = tuple(x - y for x, y in zip(a, b))
    if any(v < 0 for v in out):
        raise MultiIndexError(f"{tuple(b)} is not <= {tuple(a)}")
    return out


def binomial(a: Sequence[int], b: Sequence[int]) -> int:
    """Product of componentwise binomials C(a_i, b_i); requires b <= a."""
    if len(a) != len(b):
        raise MultiIndexError("length mismatch")
    if not leq(b, a) or any(v < 0 for v in b):
        raise MultiIndexError(f"binomial needs {tuple(b)} <= {tuple(a)}")
    out = 1
    for ai, bi in zip(a, b):
        out *= math.comb(ai, bi)
    return out


def falling(a: Sequence[int], b: Sequence[int]) -> int:
    """a!/(a-b)! componentwise, zero when b is not <= a."""
    out = 1
    for ai, bi in zip(a, b):
        if bi > ai:
            return 0
        out *= math.perm(ai, bi)
    return out


def multinomial(parts: Sequence[Sequence[int]]) -> int:
    """(sum of parts)! / prod(part!) for multi-indices."""
    total = parts[0]
    for p in parts[1:]:
        total = add(total, p)
    den = 1
    for p in parts:
        den *= factorial(p)
    return factorial(total) // den


def of_norm(total: int, d: int) -> Iterator[MultiIndex]:
    """All multi-indices of length ``total`` in d variables, lex-descending."""
    if d == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in of_norm(total - first, d - 1):
            yield (first,) + rest


def iterate_upto(total: int, d: int) -> Iterator[MultiIndex]:
    """Graded-lex enumeration of multi-indices with |a| <= total."""
    for t in range(total + 1):
        yield from of_norm(t, d)


def box(upper: Sequence[int]) -> Iterator[MultiIndex]:
    """All a with 0 <= a <= upper componentwise."""
    return itertools.product(*(range(u + 1) for u in upper))


def minimum(a: Sequence[int], b: Sequence[int]) -> MultiIndex:
    return tuple(min(x, y) for x, y in zip(a, b))


def maximum(a: Sequence[int], b: Sequence[int]) -> MultiIndex:
    return tuple(max(x, y) for x, y in zip(a, b))


def zero(d: int) -> MultiIndex:
    return (0,) * d


def unit(d: int, i: int) -> MultiIndex:
    return tuple(1 if k == i else 0 for k in range(d))
