"""Multi-index helpers.

A multi-index is a plain tuple of non-negative ints.  All functions accept any
sequence and return tuples, so results can be used directly as dict keys.
"""
from itertools import product
from math import comb, factorial as _fact

__all__ = [
    "as_index", "zero", "unit", "order", "factorial", "binomial",
    "add", "sub", "scale", "leq", "enumerate_order", "enumerate_upto",
    "half_minors", "splits", "monomial", "label",
]

_INT64_MAX = 2**63 - 1


def as_index(alpha):
    a = tuple(int(v) for v in alpha)
    if any(v < 0 for v in a):
        raise ValueError(f"multi-index has negative entries: {a}")
    return a


def zero(n):
    return (0,) * n


def unit(j, n):
    """The j-th unit vector e_j in dimension n (0-based j)."""
    e = [0] * n
    e[j] = 1
    return tuple(e)


def order(alpha):
    return sum(as_index(alpha))


def factorial(alpha):
    """Product of component factorials; raises OverflowError past int64."""
    out = 1
    for a in as_index(alpha):
        out *= _fact(a)
        if out > _INT64_MAX:
            raise OverflowError(f"alpha! overflows int64 for {tuple(alpha)}")
    return out


def binomial(alpha, beta):
    """alpha!/(beta!(alpha-beta)!), zero unless beta <= alpha."""
    alpha, beta = as_index(alpha), as_index(beta)
    out = 1
    for a, b in zip(alpha, beta):
        if b > a:
            return 0
        out *= comb(a, b)
    return out


def add(alpha, beta):
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha, beta):
    out = tuple(a - b for a, b in zip(alpha, beta))
    if any(v < 0 for v in out):
        raise ValueError(f"{tuple(beta)} is not <= {tuple(alpha)}")
    return out


def scale(c, alpha):
    return tuple(c * a for a in alpha)


def leq(beta, alpha):
    return all(b <= a for a, b in zip(alpha, beta))


def enumerate_order(k, n):
    """All multi-indices of order k in dimension n, lexicographically descending.

    The first component runs from k down to 0, so ``enumerate_order(2, 2)``
    gives ``[(2, 0), (1, 1), (0, 2)]``.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if k < 0:
        return []
    if n == 1:
        return [(k,)]
    out = []
    for first in range(k, -1, -1):
        for rest in enumerate_order(k - first, n - 1):
            out.append((first,) + rest)
    return out


def enumerate_upto(m, n):
    """All multi-indices with order <= m, grouped by increasing order."""
    out = []
    for k in range(m + 1):
        out.extend(enumerate_order(k, n))
    return out


def half_minors(alpha):
    """All beta with 2*beta <= alpha componentwise."""
    alpha = as_index(alpha)
    ranges = [range(a // 2 + 1) for a in alpha]
    return [tuple(b) for b in product(*ranges)]


def splits(alpha):
    """All pairs (beta, gamma) with beta + gamma = alpha."""
    alpha = as_index(alpha)
    out = []
    for beta in product(*[range(a + 1) for a in alpha]):
        out.append((tuple(beta), sub(alpha, beta)))
    return out


def monomial(coords, alpha):
    """Evaluate x^alpha on a tuple of coordinate arrays (one per dimension)."""
    val = 1.0
    for x, a in zip(coords, alpha):
        if a:
            val = val * x**a
    return val


def label(alpha):
    """Compact text form used in CSV files, e.g. (2, 0) -> '2;0'."""
    return ";".join(str(a) for a in alpha)
