"""Standard test fields: shifted Gaussians and Gaussian wave packets."""
import numpy as np

from .field import GridField
from .semigroup import gaussian_values

__all__ = ["shifted_gaussian", "packet", "even_packet", "random_packets"]


def shifted_gaussian(grid, nu=1.0, shift=0.0, amplitude=1.0):
    """amplitude * G_nu(x - shift); ``shift`` is a scalar or per-axis vector."""
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (grid.n,))
    coords = tuple(c - s for c, s in zip(grid.coords, shift))
    return GridField(grid, amplitude * gaussian_values(nu, coords))


def packet(grid, center=0.0, width=1.0, wavenumber=0.0, amplitude=1.0):
    """amplitude * exp(-|x - c|^2 / (2 w^2) + i k.x)."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.n,))
    k = np.broadcast_to(np.asarray(wavenumber, dtype=float), (grid.n,))
    r2 = sum((c - a) ** 2 for c, a in zip(grid.coords, center))
    phase = sum(kj * c for kj, c in zip(k, grid.coords))
    return GridField(grid, amplitude * np.exp(-r2 / (2 * width**2) + 1j * phase))


def even_packet(grid, width=1.5, wavenumber=1.0):
    """Real even packet cos(k x_1) exp(-|x|^2 / (2 w^2)); all odd moments vanish."""
    r2 = sum(c**2 for c in grid.coords)
    return GridField(grid, np.cos(wavenumber * grid.coords[0]) * np.exp(-r2 / (2 * width**2)))


def random_packets(rng, grid, count=5, max_terms=3):
    """Sums of a few Gaussian packets with random centres, widths and carriers."""
    out = []
    for _ in range(count):
        total = GridField.zeros(grid)
        for _ in range(int(rng.integers(1, max_terms + 1))):
            total = total + packet(
                grid,
                center=rng.uniform(-3, 3, grid.n),
                width=rng.uniform(0.7, 2.0),
                wavenumber=rng.uniform(-1.5, 1.5, grid.n),
                amplitude=complex(rng.normal(), rng.normal()),
            )
        out.append(total)
    return out
