"""Asymptotic profiles built from moments and Hermite-Gaussian modes.

All self-similar pieces delta_t(h_{nu,alpha} G_nu) are evaluated in closed
form at the rescaled coordinates x / sqrt(t), so profiles carry no
interpolation error.
"""
import csv
from dataclasses import dataclass, field as dc_field
from math import factorial as _fact

import numpy as np

from . import multiindex as mi
from .errors import IncompleteSpec
from .field import GridField, fmt, lq_norm, weighted_l1
from .hermite import hermite_gaussian
from .moments import MomentTable
from .semigroup import KernelSpec, apply, laplacian_power

__all__ = [
    "ExpansionSpec", "linear_profile", "assemble_A", "layer", "layer_coefficients",
    "laplacian_series", "remainder_bound", "write_layer_csv",
]


def linear_profile(alpha, N, t, moments, nu, grid):
    """Order-N expansion of d^alpha exp(t nu Lap) phi from the moments of phi.

        (-2)^{-|alpha|} t^{-|alpha|/2} sum_{k<=N} 2^{-k} t^{-k/2}
            sum_{|beta|=k} M_beta(phi) delta_t(h_{nu, alpha+beta} G_nu)
    """
    if t <= 0:
        raise ValueError("t must be positive")
    alpha = mi.as_index(alpha)
    if moments.m < N:
        raise IncompleteSpec(f"moments of {moments.source!r} known to order {moments.m} < {N}")
    n = grid.n
    out = np.zeros(grid.shape, dtype=np.complex128)
    for k in range(N + 1):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for beta in mi.enumerate_order(k, n):
            c = moments[beta]
            if c == 0:
                continue
            acc += c * hermite_gaussian(nu, mi.add(alpha, beta), grid, t).values
        out += 2.0 ** (-k) * t ** (-k / 2) * acc
    a = mi.order(alpha)
    return GridField(grid, (-2.0) ** (-a) * t ** (-a / 2) * out)


def remainder_bound(alpha, m, t, phi, nu, q):
    """Explicit bound on the scaled remainder of linear_profile:

        t^{(n/2)(1-1/q)+(|alpha|+m)/2} ||d^alpha e^{t nu Lap} phi - Lambda_{alpha,m}(t; phi)||_q
            <= 2^{-(|alpha|+m+1)} t^{-1/2} sum_{|beta|=m+1} ||h_{nu,alpha+beta} G_nu||_q ||x^beta phi||_1 / beta!
    """
    alpha = mi.as_index(alpha)
    grid = phi.grid
    total = 0.0
    for beta in mi.enumerate_order(m + 1, grid.n):
        h = hermite_gaussian(nu, mi.add(alpha, beta), grid)
        total += lq_norm(h, q) * weighted_l1(phi, beta) / mi.factorial(beta)
    return 2.0 ** (-(mi.order(alpha) + m + 1)) * t ** -0.5 * total


@dataclass(frozen=True)
class ExpansionSpec:
    """Frozen data for A_m: order, viscosity, and the needed moment tables.

    ``psi_moments[k]`` must be complete to order m - 2k for every k <= m/2.
    """

    m: int
    nu: complex
    u0_moments: MomentTable
    psi_moments: dict = dc_field(default_factory=dict)
    grid: object = None

    def __post_init__(self):
        object.__setattr__(self, "nu", complex(self.nu))
        if self.u0_moments.m < self.m:
            raise IncompleteSpec(f"u0 moments known to order {self.u0_moments.m} < m = {self.m}")
        for k in range(self.m // 2 + 1):
            need = self.m - 2 * k
            tab = self.psi_moments.get(k)
            if tab is None or tab.m < need:
                raise IncompleteSpec(f"psi_{k} moments must be complete to order {need}")

    @property
    def n(self):
        return self.u0_moments.n


def assemble_A(spec, t, grid=None):
    """A_m(t) = Lambda_{0,m}(t; u0) + sum_{|g|<=m/2} (-nu)^{|g|}/g! Lambda_{2g, m-2|g|}(t; psi_|g|)."""
    grid = grid or spec.grid
    n, m, nu = spec.n, spec.m, spec.nu
    out = linear_profile(mi.zero(n), m, t, spec.u0_moments, nu, grid)
    for g in mi.enumerate_upto(m // 2, n):
        k = mi.order(g)
        c = (-nu) ** k / mi.factorial(g)
        out = out + c * linear_profile(mi.scale(2, g), m - 2 * k, t, spec.psi_moments[k], nu, grid)
    return out


def layer_coefficients(spec, k):
    """Combined coefficients c_alpha for |alpha| = k.

        c_alpha = M_alpha(u0) + sum_{beta + 2 gamma = alpha} (-nu)^{|gamma|}/gamma! M_beta(psi_|gamma|)
    """
    if k > spec.m:
        raise ValueError(f"layer {k} exceeds expansion order {spec.m}")
    n, nu = spec.n, spec.nu
    out = {}
    for alpha in mi.enumerate_order(k, n):
        c = spec.u0_moments[alpha]
        for g in mi.half_minors(alpha):
            beta = mi.sub(alpha, mi.scale(2, g))
            j = mi.order(g)
            c += (-nu) ** j / mi.factorial(g) * spec.psi_moments[j][beta]
        out[alpha] = c
    return out


def layer(spec, k, t, grid=None):
    """A_k(t) - A_{k-1}(t) = 2^{-k} t^{-k/2} sum_{|alpha|=k} c_alpha delta_t(h_{nu,alpha} G_nu)."""
    if k < 0 or k > spec.m:
        raise ValueError(f"layer order must lie in 0..{spec.m}")
    grid = grid or spec.grid
    out = np.zeros(grid.shape, dtype=np.complex128)
    for alpha, c in layer_coefficients(spec, k).items():
        if c != 0:
            out += c * hermite_gaussian(spec.nu, alpha, grid, t).values
    return GridField(grid, 2.0 ** (-k) * t ** (-k / 2) * out)


def laplacian_series(t, u0, psi_fields, nu, N):
    """exp(t nu Lap) u0 + sum_{k<=N} (1/k!) (-nu Lap)^k exp(t nu Lap) psi_k."""
    spec = KernelSpec(nu, t)
    out = apply(u0, spec)
    for k in range(N + 1):
        psi = psi_fields[k]
        out = out + laplacian_power(psi, spec, k) / _fact(k)
    return out


def write_layer_csv(path, spec, kmax=None):
    kmax = spec.m if kmax is None else kmax
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "alpha", "re", "im"])
        for k in range(kmax + 1):
            for alpha, c in layer_coefficients(spec, k).items():
                w.writerow([k, mi.label(alpha), fmt(c.real), fmt(c.imag)])
