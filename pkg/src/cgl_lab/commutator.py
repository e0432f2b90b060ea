"""Commutators of monomial weights with the semigroup.

[x^alpha, exp(t nu Lap)] is expanded into terms

    coef * (t nu)^l * d^beta exp(t nu Lap) (x^gamma phi)

by repeatedly rewriting x_j exp(t nu Lap) = exp(t nu Lap) x_j - 2 t nu d_j exp(t nu Lap)
and moving weights through derivatives with d^beta(x_j g) = x_j d^beta g + beta_j d^{beta-e_j} g.
Coefficients are exact rationals.
"""
import csv
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import multiindex as mi
from .field import GridField, check_boundary, integrate, lq_norm
from .semigroup import KernelSpec, apply, gaussian_values
from .hermite import gauss_derivative

__all__ = [
    "CommutatorExpr", "build_R", "evaluate_R", "commutator_direct",
    "verify_identity", "estimate_check", "estimate_limit", "augmented_check", "general_weight_check",
    "write_csv",
]


@dataclass(frozen=True)
class CommutatorExpr:
    """Canonical sum of terms keyed by (beta, gamma, power of t nu)."""

    alpha: tuple
    terms: tuple  # ((beta, gamma, power, Fraction coefficient), ...)


def _x_times(terms, j, n):
    """Multiply a term map on the left by x_j and renormalize."""
    e = mi.unit(j, n)
    out = {}

    def put(key, c):
        out[key] = out.get(key, 0) + c

    for (beta, gamma, ell), c in terms.items():
        # x_j d^beta E x^gamma = d^beta x_j E x^gamma - beta_j d^{beta-e_j} E x^gamma
        #                      = d^beta E x^{gamma+e_j} - 2 t nu d^{beta+e_j} E x^gamma
        #                        - beta_j d^{beta-e_j} E x^gamma
        put((beta, mi.add(gamma, e), ell), c)
        put((mi.add(beta, e), gamma, ell + 1), -2 * c)
        if beta[j]:
            put((mi.sub(beta, e), gamma, ell), -beta[j] * c)
    return out


@lru_cache(maxsize=None)
def _build(alpha):
    n = len(alpha)
    if not any(alpha):
        return {}
    j = next(i for i, a in enumerate(alpha) if a)
    e = mi.unit(j, n)
    prev = mi.sub(alpha, e)
    # [x^{prev+e_j}, E] = x_j [x^prev, E] + [x_j, E] x^prev
    terms = _x_times(_build(prev), j, n)
    key = (e, prev, 1)
    terms[key] = terms.get(key, 0) + Fraction(-2)
    return {k: Fraction(v) for k, v in terms.items() if v != 0}


def build_R(alpha):
    alpha = mi.as_index(alpha)
    terms = _build(alpha)
    ordered = sorted(terms.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1]))
    out = tuple((beta, gamma, ell, c) for (beta, gamma, ell), c in ordered)
    top = mi.order(alpha)
    assert all(mi.order(g) <= top - 1 for _, g, _, _ in out)
    return CommutatorExpr(alpha, out)


def evaluate_R(expr, phi, t, nu):
    """Apply R_alpha(t) to a field."""
    grid = phi.grid
    spec = KernelSpec(nu, t)
    out = np.zeros(grid.shape, dtype=np.complex128)
    weighted = {}
    for beta, gamma, ell, c in expr.terms:
        if gamma not in weighted:
            weighted[gamma] = phi * mi.monomial(grid.coords, gamma)
        out += float(c) * (t * complex(nu)) ** ell * apply(weighted[gamma], spec, beta).values
    return GridField(grid, out)


def commutator_direct(alpha, phi, t, nu):
    """x^alpha exp(t nu Lap) phi - exp(t nu Lap)(x^alpha phi), both by FFT."""
    grid = phi.grid
    w = mi.monomial(grid.coords, mi.as_index(alpha))
    spec = KernelSpec(nu, t)
    return apply(phi, spec) * w - apply(phi * w, spec)


def verify_identity(alpha, phi, t, nu):
    """Deviation between the direct commutator and R_alpha(t) phi.

    Returns a dict with the L^1 and sup deviations and the sup of the
    commutator itself for scale.
    """
    alpha = mi.as_index(alpha)
    lhs = commutator_direct(alpha, phi, t, nu)
    check_boundary(apply(phi, KernelSpec(nu, t)) * mi.monomial(phi.grid.coords, alpha),
                   what="commutator")
    rhs = evaluate_R(build_R(alpha), phi, t, nu)
    d = lhs - rhs
    return {"l1": lq_norm(d, 1), "sup": lq_norm(d, np.inf), "scale": lq_norm(lhs, np.inf)}


def _radial_l1(phi, power):
    if power == 0:
        return lq_norm(phi, 1)
    check_boundary(phi, what="radial weight")
    r = np.sqrt(phi.grid.r2)
    return float(np.abs(r**power * phi.values).sum() * phi.grid.cell)


def estimate_check(m, phi, ts, nu):
    """Ratios of sum_{|alpha|=m} ||[x^alpha, E]phi||_1 to the bound without its constant.

    The bound is t^{1/2} || |x|^{m-1} phi ||_1 + (t^{1/2} + t^{m/2}) ||phi||_1.
    """
    if not 1 <= m <= 3:
        raise ValueError("m must lie in 1..3")
    n = phi.grid.n
    w = _radial_l1(phi, m - 1)
    l1 = lq_norm(phi, 1)
    rows = []
    for t in ts:
        lhs = sum(lq_norm(commutator_direct(a, phi, t, nu), 1) for a in mi.enumerate_order(m, n))
        rhs = np.sqrt(t) * w + (np.sqrt(t) + t ** (m / 2)) * l1
        rows.append((float(t), float(lhs), float(rhs), float(lhs / rhs) if rhs else 0.0))
    ratios = [r[3] for r in rows]
    return {"rows": rows, "sup_ratio": max(ratios),
            "argmax_t": rows[int(np.argmax(ratios))][0]}


def estimate_limit(m, phi, nu):
    """Large-t limit of the estimate_check ratio.

    For t -> oo, e^{t nu Lap} phi ~ M_0(phi) G_{t nu}, so the commutator
    behaves like M_0 x^alpha G_{t nu} and both sides grow like t^{m/2}.
    """
    grid = phi.grid
    g = gaussian_values(nu, grid.coords)
    m0 = abs(integrate(phi))
    lhs = sum(np.abs(mi.monomial(grid.coords, a) * g).sum() * grid.cell
              for a in mi.enumerate_order(m, grid.n))
    l1 = lq_norm(phi, 1)
    # t^{m/2} coefficient of the bound; for m = 1 all three terms share it
    coef = 3 * l1 if m == 1 else l1
    return m0 * lhs / coef


def augmented_check(m, phi, ts, nu):
    """Ratios of sum_j sum_{|alpha|=m} ||x_j R_alpha phi||_1 to
    t^{1/2} || |x|^m phi ||_1 + (t^{1/2} + t^{(m+1)/2}) ||phi||_1."""
    grid = phi.grid
    n = grid.n
    w = _radial_l1(phi, m)
    l1 = lq_norm(phi, 1)
    rows = []
    for t in ts:
        lhs = 0.0
        for a in mi.enumerate_order(m, n):
            r = evaluate_R(build_R(a), phi, t, nu)
            for j in range(n):
                lhs += lq_norm(r * grid.coords[j], 1)
        rhs = np.sqrt(t) * w + (np.sqrt(t) + t ** ((m + 1) / 2)) * l1
        rows.append((float(t), float(lhs), float(rhs), float(lhs / rhs) if rhs else 0.0))
    return {"rows": rows, "sup_ratio": max(r[3] for r in rows)}


def general_weight_check(w, grad_w, lap_w, phi, t, nu):
    """Check ||[w, E]phi||_1 against its explicit bound for a smooth weight.

    ``w``, ``grad_w`` and ``lap_w`` are callables of the coordinate arrays;
    ``grad_w`` returns a tuple of components.  The available bound is

        |nu| ||G_nu||_1 (||Lap w||_inf ||G_nu||_1 t + 4 ||grad w||_inf ||grad G_nu||_1 t^{1/2}) ||phi||_1.
    """
    grid = phi.grid
    nu = complex(nu)
    coords = grid.coords
    wv = np.broadcast_to(w(*coords), grid.shape)
    spec = KernelSpec(nu, t)
    lhs = lq_norm(apply(phi, spec) * wv - apply(phi * wv, spec), 1)
    grad = [np.broadcast_to(g, grid.shape) for g in grad_w(*coords)]
    grad_sup = float(np.sqrt(sum(np.abs(g) ** 2 for g in grad)).max())
    lap_sup = float(np.abs(np.broadcast_to(lap_w(*coords), grid.shape)).max())
    g1 = lq_norm(GridField(grid, gaussian_values(nu, coords)), 1)
    dg = [gauss_derivative(nu, mi.unit(j, grid.n), grid).values for j in range(grid.n)]
    dg1 = float(np.sqrt(sum(np.abs(d) ** 2 for d in dg)).sum() * grid.cell)
    rhs = abs(nu) * g1 * (lap_sup * g1 * t + 4 * grad_sup * dg1 * np.sqrt(t)) * lq_norm(phi, 1)
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs,
            "margin": rhs / lhs if lhs else float("inf")}


def write_csv(path, alphas):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["alpha", "beta", "gamma", "tnu_power", "coefficient"])
        for a in alphas:
            for beta, gamma, ell, c in build_R(a).terms:
                wr.writerow([mi.label(a), mi.label(beta), mi.label(gamma), ell, str(c)])
