"""The semigroup exp(t nu Lap) as an exact Fourier multiplier on the box."""
from dataclasses import dataclass

import numpy as np

from .field import GridField
from .multiindex import as_index

__all__ = [
    "KernelSpec", "gaussian", "gaussian_values", "apply", "laplacian_power",
    "multiplier", "free_evolution",
]


@dataclass(frozen=True)
class KernelSpec:
    nu: complex
    t: float

    def __post_init__(self):
        object.__setattr__(self, "nu", complex(self.nu))
        object.__setattr__(self, "t", float(self.t))
        if self.nu.real <= 0:
            raise ValueError("Re nu must be positive")
        if self.t < 0:
            raise ValueError("t must be non-negative")


def gaussian_values(mu, coords):
    """(4 pi mu)^{-n/2} exp(-|x|^2 / (4 mu)) for complex mu with Re mu > 0.

    ``coords`` is a tuple of (broadcastable) coordinate arrays.  The complex
    power takes the principal branch, which is unambiguous because 4 pi mu
    stays in the right half-plane.
    """
    mu = complex(mu)
    n = len(coords)
    r2 = sum(np.asarray(c) ** 2 for c in coords)
    return (4 * np.pi * mu) ** (-n / 2) * np.exp(-r2 / (4 * mu))


def gaussian(spec, grid):
    """Sample the kernel G_{t nu} on the grid (t > 0)."""
    if spec.t == 0:
        raise ValueError("G_{t nu} at t = 0 is a point mass")
    return GridField(grid, gaussian_values(spec.t * spec.nu, grid.coords))


def _deriv_factor(grid, alpha):
    fac = 1.0
    for j, a in enumerate(alpha):
        if a == 0:
            continue
        k = grid.wavenumbers[j]
        if a % 2 == 1:
            # An odd derivative of the real Nyquist mode is not representable;
            # dropping it keeps real fields real.
            k = k.copy()
            k.flat[grid.N // 2] = 0.0
        fac = fac * (1j * k) ** a
    return fac


def multiplier(grid, nu, t, alpha=None):
    """Fourier symbol (i xi)^alpha exp(-t nu |xi|^2) on the grid."""
    m = np.exp(-complex(nu) * t * grid.k2)
    if alpha is not None and any(alpha):
        m = m * _deriv_factor(grid, as_index(alpha))
    return m


def apply(phi, spec, alpha=None):
    """d^alpha exp(t nu Lap) phi via FFT."""
    grid = phi.grid
    if alpha is None:
        alpha = (0,) * grid.n
    alpha = as_index(alpha)
    if spec.t == 0 and not any(alpha):
        return phi
    m = multiplier(grid, spec.nu, spec.t, alpha)
    return GridField(grid, np.fft.ifftn(np.fft.fftn(phi.values) * m))


def laplacian_power(phi, spec, k):
    """(-nu Lap)^k exp(t nu Lap) phi, symbol (nu |xi|^2)^k exp(-t nu |xi|^2)."""
    if not 0 <= k <= 8:
        raise ValueError("k must lie in 0..8")
    grid = phi.grid
    m = multiplier(grid, spec.nu, spec.t)
    if k:
        m = m * (spec.nu * grid.k2) ** k
    return GridField(grid, np.fft.ifftn(np.fft.fftn(phi.values) * m))


def free_evolution(phi, nu, t):
    return apply(phi, KernelSpec(nu, t))
