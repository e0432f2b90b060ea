"""Hermite polynomials with a complex parameter.

For Re nu > 0 and a multi-index alpha,

    h_{nu,alpha}(x) = sum_{2 beta <= alpha} (-1)^{|beta|} alpha! / (beta! (alpha - 2 beta)!)
                      * nu^{-|alpha - beta|} x^{alpha - 2 beta},

so that d^alpha G_nu = (-2)^{-|alpha|} h_{nu,alpha} G_nu and the family is
orthogonal against G_nu with norms (2/nu)^{|alpha|} alpha!.
"""
import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import multiindex as mi
from .errors import DomainTooSmall
from .field import GridField, boundary_mass_fraction, fmt
from .semigroup import gaussian_values

__all__ = [
    "HermitePoly", "build", "evaluate", "hermite_gaussian", "gauss_derivative",
    "gram", "gram_diagonal", "dump_csv",
]


@dataclass(frozen=True)
class HermitePoly:
    nu: complex
    alpha: tuple
    terms: tuple  # ((coefficient, exponent), ...)

    def __call__(self, *coords):
        return evaluate(self, coords)


def _inv_power(nu, k):
    # repeated division keeps nu^{-k} free of any branch choice
    out = 1.0 + 0j
    for _ in range(k):
        out = out / nu
    return out


@lru_cache(maxsize=512)
def _build(nu, alpha):
    a_fact = mi.factorial(alpha)
    terms = []
    for beta in mi.half_minors(alpha):
        expo = mi.sub(alpha, mi.scale(2, beta))
        coef = (-1) ** mi.order(beta) * a_fact // (mi.factorial(beta) * mi.factorial(expo))
        terms.append((coef * _inv_power(nu, mi.order(mi.sub(alpha, beta))), expo))
    return HermitePoly(nu, alpha, tuple(terms))


def build(nu, alpha):
    nu = complex(nu)
    if nu.real <= 0:
        raise ValueError("Re nu must be positive")
    return _build(nu, mi.as_index(alpha))


def evaluate(poly, coords):
    """Direct summation of the coefficient table at the given coordinates."""
    out = 0
    for coef, expo in poly.terms:
        out = out + coef * mi.monomial(coords, expo)
    return out


def hermite_gaussian(nu, alpha, grid, t=1.0):
    """Sample delta_t(h_{nu,alpha} G_nu) = t^{-n/2} (h G_nu)(x / sqrt(t)) exactly."""
    poly = build(nu, alpha)
    s = np.sqrt(t)
    y = tuple(c / s for c in grid.coords)
    vals = evaluate(poly, y) * gaussian_values(nu, y) * t ** (-grid.n / 2)
    return GridField(grid, vals)


def gauss_derivative(nu, alpha, grid, t=1.0):
    """Sample d^alpha G_{t nu} through the Hermite formula.

    With t = 1 this is (-2)^{-|alpha|} h_{nu,alpha} G_nu; general t uses the
    scaling d^alpha G_{t nu} = t^{-|alpha|/2} delta_t(d^alpha G_nu).
    """
    k = mi.order(alpha)
    scale = (-2.0) ** (-k) * t ** (-k / 2)
    return hermite_gaussian(nu, alpha, grid, t) * scale


def gram(nu, orders, grid):
    """Matrix of integrals of h_alpha h_beta G_nu over the box (bilinear, no conjugate).

    Raises DomainTooSmall when the highest-order integrand still carries
    boundary mass.
    """
    nu = complex(nu)
    coords = grid.coords
    g = gaussian_values(nu, coords)
    polys = [np.broadcast_to(evaluate(build(nu, a), coords), grid.shape) for a in orders]
    top = max(range(len(orders)), key=lambda i: mi.order(orders[i]))
    frac = boundary_mass_fraction(GridField(grid, polys[top] * polys[top] * g))
    if frac > 1e-12:
        raise DomainTooSmall(f"Gram integrand not resolved in the box (shell fraction {frac:.2e})")
    k = len(orders)
    out = np.empty((k, k), dtype=np.complex128)
    for i in range(k):
        weighted = polys[i] * g
        for j in range(i, k):
            out[i, j] = out[j, i] = (weighted * polys[j]).sum() * grid.cell
    return out


def gram_diagonal(nu, alpha):
    """Exact value (2/nu)^{|alpha|} alpha! of the Gram diagonal."""
    return (2 / complex(nu)) ** mi.order(alpha) * mi.factorial(alpha)


def dump_csv(path, nu, alphas):
    """Coefficient tables, one row per monomial: alpha, exponent, Re, Im."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nu_re", "nu_im", "alpha", "exponent", "coef_re", "coef_im"])
        for a in alphas:
            p = build(nu, a)
            for coef, expo in p.terms:
                w.writerow([fmt(p.nu.real), fmt(p.nu.imag), mi.label(a), mi.label(expo),
                            fmt(coef.real), fmt(coef.imag)])
