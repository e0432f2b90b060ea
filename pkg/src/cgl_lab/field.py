"""Complex fields sampled on a centered periodic box.

The whole space is truncated to the box [-L/2, L/2)^n with N points per side.
Integrals use the rectangle rule, which is exponentially accurate for smooth
integrands that decay well inside the box.
"""
import csv
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainTooSmall, FieldCorruption
from .multiindex import as_index, monomial

__all__ = [
    "Grid", "GridField", "SHELL_FRACTION", "BOUNDARY_TOL",
    "lq_norm", "integrate", "weighted_l1", "boundary_mass_fraction",
    "check_boundary", "dilate", "translate",
    "save_snapshot", "load_snapshot", "export_csv", "fmt",
]


def fmt(x):
    """Plain text for a scalar in CSV output (round-trips through float())."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


# A node is in the outer shell when max_j |x_j| >= SHELL_FRACTION * L/2,
# i.e. it lies in the last 10% of the side length (5% at either end).
SHELL_FRACTION = 0.9
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if self.L <= 0:
            raise ValueError("box length must be positive")
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two")

    @property
    def h(self):
        return self.L / self.N

    @property
    def cell(self):
        return self.h**self.n

    @property
    def shape(self):
        return (self.N,) * self.n

    @cached_property
    def x(self):
        """One-dimensional node coordinates."""
        return -self.L / 2 + self.h * np.arange(self.N)

    @cached_property
    def xi(self):
        """One-dimensional angular wavenumbers 2*pi*k/L in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    def _sparse(self, v, j):
        shape = [1] * self.n
        shape[j] = self.N
        return v.reshape(shape)

    @cached_property
    def coords(self):
        """Broadcastable coordinate arrays, one per dimension."""
        return tuple(self._sparse(self.x, j) for j in range(self.n))

    @cached_property
    def wavenumbers(self):
        return tuple(self._sparse(self.xi, j) for j in range(self.n))

    @cached_property
    def r2(self):
        return sum(c**2 for c in self.coords) * np.ones(self.shape)

    @cached_property
    def k2(self):
        return sum(k**2 for k in self.wavenumbers) * np.ones(self.shape)

    @cached_property
    def shell_mask(self):
        edge = SHELL_FRACTION * self.L / 2
        mask = np.zeros(self.shape, dtype=bool)
        for c in self.coords:
            mask |= np.abs(c) >= edge
        return mask


class GridField:
    """Immutable complex samples of a function on a Grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        arr = np.array(values, dtype=np.complex128)
        if arr.shape != grid.shape:
            try:
                arr = np.broadcast_to(arr, grid.shape).copy()
            except ValueError:
                raise ValueError(
                    f"values of shape {arr.shape} do not fit grid {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise FieldCorruption("field contains NaN or Inf")
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridField is immutable")

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(*coords)`` on the grid."""
        return cls(grid, fn(*grid.coords))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    def _other(self, other):
        if isinstance(other, GridField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridField(self.grid, self.values / c)

    def __neg__(self):
        return GridField(self.grid, -self.values)

    def __repr__(self):
        g = self.grid
        return f"GridField(n={g.n}, L={g.L}, N={g.N})"


def lq_norm(phi, q):
    """Discrete L^q norm; q = inf gives the grid maximum."""
    q = float(q)
    if q < 1:
        raise ValueError("q must be >= 1")
    a = np.abs(phi.values)
    if np.isinf(q):
        return float(a.max())
    if q == 1:
        return float(a.sum() * phi.grid.cell)
    scale = a.max()
    if scale == 0:
        return 0.0
    return float(scale * ((a / scale) ** q).sum() ** (1 / q) * phi.grid.cell ** (1 / q))


def integrate(phi):
    return complex(phi.values.sum() * phi.grid.cell)


def boundary_mass_fraction(phi):
    """Fraction of the |phi| mass sitting in the outer shell of the box."""
    a = np.abs(phi.values)
    total = a.sum()
    if total == 0:
        return 0.0
    return float(a[phi.grid.shell_mask].sum() / total)


def check_boundary(phi, tol=BOUNDARY_TOL, what="field"):
    frac = boundary_mass_fraction(phi)
    if frac > tol:
        raise DomainTooSmall(
            f"{what}: boundary-shell mass fraction {frac:.3e} exceeds {tol:.1e}; "
            "enlarge the box")
    return frac


def weighted_l1(phi, alpha):
    """Sum of |x^alpha phi| h^n, after checking the boundary shell."""
    alpha = as_index(alpha)
    check_boundary(phi, what="weighted_l1")
    w = monomial(phi.grid.coords, alpha)
    return float(np.abs(w * phi.values).sum() * phi.grid.cell)


def _interp_axis(values, axis, y, grid, chunk=512):
    """Band-limited interpolation of ``values`` along one axis at points y.

    Points outside the box are returned as zero.
    """
    N, L = grid.N, grid.L
    vhat = np.moveaxis(np.fft.fft(values, axis=axis), axis, 0)
    flat = vhat.reshape(N, -1)
    xi = grid.xi.copy()
    nyq = N // 2
    inside = np.abs(y) <= L / 2
    out = np.zeros((y.size, flat.shape[1]), dtype=np.complex128)
    idx = np.nonzero(inside)[0]
    for lo in range(0, idx.size, chunk):
        rows = idx[lo:lo + chunk]
        arg = np.outer(y[rows] + L / 2, xi)
        B = np.exp(1j * arg)
        B[:, nyq] = np.cos(arg[:, nyq])
        out[rows] = (B @ flat) / N
    out = out.reshape((y.size,) + vhat.shape[1:])
    return np.moveaxis(out, 0, axis)


def dilate(phi, t):
    """Parabolic rescaling t^{-n/2} phi(x / sqrt(t)) by Fourier interpolation.

    For t < 1 the sample points x/sqrt(t) leave the box; the field is then
    required to vanish (to the boundary tolerance) near the edge, and is
    continued by zero.
    """
    if t <= 0:
        raise ValueError("dilation parameter must be positive")
    if t == 1:
        return phi
    grid = phi.grid
    if t < 1:
        frac = boundary_mass_fraction(phi)
        if frac > BOUNDARY_TOL:
            raise DomainTooSmall(
                f"dilation by t={t} samples outside the box where the field "
                f"still carries mass fraction {frac:.3e}")
    y = grid.x / np.sqrt(t)
    v = phi.values
    for axis in range(grid.n):
        v = _interp_axis(v, axis, y, grid)
    return GridField(grid, t ** (-grid.n / 2) * v)


def translate(phi, shift):
    """tau_h phi(x) = phi(x - h) through a Fourier phase factor."""
    grid = phi.grid
    shift = np.broadcast_to(np.asarray(shift, dtype=float), (grid.n,))
    if not np.any(shift):
        return phi
    phase = np.ones(grid.shape, dtype=np.complex128)
    for k, s in zip(grid.wavenumbers, shift):
        phase = phase * np.exp(-1j * k * s)
    return GridField(grid, np.fft.ifftn(np.fft.fftn(phi.values) * phase))


_MAGIC = b"CGLF"
_HEADER = struct.Struct("<4sIIIdddd")


def save_snapshot(path, phi, t=0.0, nu=1.0, tag=""):
    """Write a field in the binary snapshot format.

    Layout: magic 'CGLF', version, n, N (uint32), L, t, Re nu, Im nu
    (float64), tag length (uint32), UTF-8 tag, then N^n little-endian
    complex128 values in row-major order.
    """
    g = phi.grid
    nu = complex(nu)
    tag_b = tag.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, g.n, g.N, g.L, float(t), nu.real, nu.imag))
        fh.write(struct.pack("<I", len(tag_b)))
        fh.write(tag_b)
        fh.write(np.ascontiguousarray(phi.values, dtype="<c16").tobytes())


def load_snapshot(path):
    """Read a snapshot; returns (field, t, nu, tag)."""
    with open(path, "rb") as fh:
        magic, version, n, N, L, t, nr, ni = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC or version != 1:
            raise ValueError(f"{path} is not a field snapshot")
        (tlen,) = struct.unpack("<I", fh.read(4))
        tag = fh.read(tlen).decode("utf-8")
        data = np.frombuffer(fh.read(), dtype="<c16")
    grid = Grid(n, L, N)
    return GridField(grid, data.reshape(grid.shape)), t, complex(nr, ni), tag


def export_csv(path, phi):
    """Write coordinates with real and imaginary parts, one row per node."""
    g = phi.grid
    full = [np.broadcast_to(c, g.shape).ravel() for c in g.coords]
    vals = phi.values.ravel()
    names = ["x"] if g.n == 1 else [f"x{j + 1}" for j in range(g.n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["re", "im"])
        for i in range(vals.size):
            w.writerow([fmt(c[i]) for c in full]
                       + [fmt(vals[i].real), fmt(vals[i].imag)])
