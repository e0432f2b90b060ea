"""Small-data global solver for  u_t - nu Lap u = f(u)  in mild (Duhamel) form.

Time stepping uses a second-order exponential integrator in which the linear
flow is exact in Fourier space.  One step of size dt from u reads

    u~  = E (u + dt f(u))
    u+  = E u + dt/2 (E f(u) + f(u~)),       E = exp(dt nu Lap),

and step doubling against a relative tolerance decides whether a step is
accepted or split in half.  The mesh is uniform (dt0) up to t = 1 and
geometric afterwards, which gives the logarithmic time coverage that decay
fits need.
"""
import csv
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import multiindex as mi
from .errors import BlowUp, DomainTooSmall, StepUnderflow
from .field import BOUNDARY_TOL, GridField, boundary_mass_fraction, lq_norm, fmt
from .moments import MomentTable, PsiAccumulator, accumulate_psi, moment_table
from .params import Params
from .profiles import ExpansionSpec

__all__ = [
    "SolveConfig", "Trajectory", "SolveResult", "time_mesh", "dyadic_times",
    "step", "solve", "contraction_probe", "expansion_spec", "QS",
]

QS = (1.0, 2.0, np.inf)


def dyadic_times(T, per_octave=1, t_min=1.0):
    """Times 2^{j/per_octave} in [t_min, T]."""
    j0 = int(np.ceil(per_octave * np.log2(t_min) - 1e-9))
    j1 = int(np.floor(per_octave * np.log2(T) + 1e-9))
    return [float(2.0 ** (j / per_octave)) for j in range(j0, j1 + 1)]


def time_mesh(T_max, dt0=1e-3, ratio=1.05, extra=()):
    """Uniform steps dt0 up to t = 1, then t_{j+1} = ratio * t_j, up to T_max.

    Any ``extra`` times inside (0, T_max] are inserted so that snapshots land
    exactly on mesh points.
    """
    if dt0 <= 0 or ratio <= 1:
        raise ValueError("need dt0 > 0 and ratio > 1")
    t1 = min(1.0, T_max)
    nu = int(round(t1 / dt0))
    pts = list(np.linspace(0.0, t1, nu + 1)) if nu > 0 else [0.0, t1]
    t = t1
    while t < T_max:
        t = min(t * ratio, T_max)
        pts.append(t)
    pts.extend(e for e in extra if 0 < e <= T_max)
    pts = np.unique(np.round(np.array(pts, dtype=float), 12))
    # drop spacings that are negligibly small after inserting extra times
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > 1e-9:
            keep.append(p)
    return np.array(keep)


@dataclass
class SolveConfig:
    params: Params
    u0: GridField
    T_max: float = 400.0
    dt0: float = 1e-3
    ratio: float = 1.05
    tol: float = 1e-7
    eps0: float = 1.0
    weight_orders: list = dc_field(default_factory=list)
    psi_orders: list = dc_field(default_factory=lambda: [0])
    moment_order: int = 1
    snapshot_times: list = dc_field(default_factory=list)
    dealias: bool = False
    adaptive: bool = True
    blowup_factor: float = 2.0
    min_dt: float = 1e-10
    check_domain: bool = True

    def __post_init__(self):
        if self.dt0 <= 0 or self.ratio <= 1 or self.tol <= 0:
            raise ValueError("need dt0 > 0, ratio > 1 and tol > 0")
        self.weight_orders = [mi.as_index(a) for a in self.weight_orders]


@dataclass
class Trajectory:
    times: list = dc_field(default_factory=list)
    norms: dict = dc_field(default_factory=lambda: {q: [] for q in QS})
    weighted: dict = dc_field(default_factory=dict)
    boundary: list = dc_field(default_factory=list)

    def record(self, t, u, weight_orders, weights):
        a = np.abs(u.values)
        cell = u.grid.cell
        self.times.append(float(t))
        self.norms[1.0].append(float(a.sum() * cell))
        self.norms[2.0].append(float(np.sqrt((a**2).sum() * cell)))
        self.norms[np.inf].append(float(a.max()))
        for alpha in weight_orders:
            self.weighted.setdefault(alpha, []).append(float((weights[alpha] * a).sum() * cell))
        self.boundary.append(boundary_mass_fraction(u))

    def series(self, q=None, alpha=None):
        t = np.array(self.times)
        if alpha is not None:
            return t, np.array(self.weighted[mi.as_index(alpha)])
        return t, np.array(self.norms[float(q)])

    def write_csv(self, path):
        alphas = list(self.weighted)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "q", "norm"] + [f"w_{mi.label(a)}" for a in alphas] + ["boundary_mass"])
            for i, t in enumerate(self.times):
                extra = [fmt(self.weighted[a][i]) for a in alphas]
                for q in QS:
                    w.writerow([fmt(t), "inf" if np.isinf(q) else int(q),
                                fmt(self.norms[q][i])] + extra + [fmt(self.boundary[i])])


@dataclass
class SolveResult:
    config: SolveConfig
    trajectory: Trajectory
    psi: dict
    u0_moments: MomentTable
    snapshots: dict
    u_final: GridField
    steps: int = 0
    rejections: int = 0

    def psi_moments(self, k, m=None, with_tail=True):
        return self.psi[k].moments(m, with_tail=with_tail)


def _expo(grid, nu, dt):
    return np.exp(-nu * dt * grid.k2)


def _dealias_mask(grid):
    cut = (2.0 / 3.0) * np.abs(grid.xi).max()
    mask = np.ones(grid.shape, dtype=bool)
    for k in grid.wavenumbers:
        mask &= np.abs(k) <= cut
    return mask


class _Stepper:
    def __init__(self, params, grid, dealias=False):
        self.params = params
        self.grid = grid
        self.mask = _dealias_mask(grid) if dealias else None
        self._cache = {}

    def f(self, u):
        fu = self.params.f(u)
        if self.mask is not None:
            fu = np.fft.ifftn(np.fft.fftn(fu) * self.mask)
        return fu

    def E(self, dt):
        key = round(dt, 15)
        e = self._cache.get(key)
        if e is None:
            if len(self._cache) > 64:
                self._cache.clear()
            e = self._cache[key] = _expo(self.grid, self.params.nu, dt)
        return e

    def step(self, u, fu, dt):
        """One exponential Heun step from u with f(u) = fu; returns u+."""
        if self.params.is_zero:
            return np.fft.ifftn(np.fft.fftn(u) * self.E(dt))
        E = self.E(dt)
        uh = np.fft.fftn(u)
        fh = np.fft.fftn(fu)
        u_pred = np.fft.ifftn(E * (uh + dt * fh))
        base = np.fft.ifftn(E * (uh + 0.5 * dt * fh))
        return base + 0.5 * dt * self.f(u_pred)


def step(u, t, dt, params, dealias=False):
    """Single exponential-integrator step of size dt (no error control)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    st = _Stepper(params, u.grid, dealias)
    return GridField(u.grid, st.step(u.values, st.f(u.values), dt))


def solve(config):
    """Integrate to T_max, recording diagnostics and accumulating psi_k.

    Returns a SolveResult holding the trajectory, psi accumulators, the
    moment table of u0, and field snapshots at the requested times.
    """
    p = config.params
    u0 = config.u0
    grid = u0.grid
    size = lq_norm(u0, 1) + lq_norm(u0, np.inf)
    if size > config.eps0:
        warnings.warn(f"||u0||_1 + ||u0||_inf = {size:.3g} exceeds the smallness guard "
                      f"{config.eps0:.3g}; continuing", RuntimeWarning, stacklevel=2)
    st = _Stepper(p, grid, config.dealias)
    sup0 = lq_norm(u0, np.inf)
    limit = config.blowup_factor * sup0
    weights = {a: np.abs(mi.monomial(grid.coords, a)) for a in config.weight_orders}

    accs = {}
    for k in config.psi_orders:
        orders = mi.enumerate_upto(max(config.moment_order - 2 * k, 0), grid.n)
        accs[k] = PsiAccumulator(k, grid, orders)

    mesh = time_mesh(config.T_max, config.dt0, config.ratio, config.snapshot_times)
    snap_set = {round(float(s), 9) for s in config.snapshot_times}
    traj = Trajectory()
    snapshots = {}

    u = u0.values.copy()
    fu = st.f(u)
    traj.record(0.0, u0, config.weight_orders, weights)
    for acc in accs.values():
        accumulate_psi(acc, 0.0, fu, 0.0)
    if 0.0 in snap_set:
        snapshots[0.0] = u0

    stats = {"steps": 0, "rejections": 0}

    def advance(u, fu, t, dt):
        """Controlled step from t to t + dt; psi updated on every accepted piece."""
        if dt < config.min_dt:
            raise StepUnderflow(f"step fell below {config.min_dt} at t = {t}")
        full = st.step(u, fu, dt)
        if not config.adaptive or p.is_zero:
            stats["steps"] += 1
            f_new = st.f(full)
            for acc in accs.values():
                accumulate_psi(acc, t + dt, f_new, dt)
            return full, f_new
        half = st.step(u, fu, dt / 2)
        f_half = st.f(half)
        two = st.step(half, f_half, dt / 2)
        scale = max(np.abs(two).max(), 1e-300)
        err = np.abs(two - full).max() / scale
        if err > config.tol:
            stats["rejections"] += 1
            u_mid, f_mid = advance(u, fu, t, dt / 2)
            return advance(u_mid, f_mid, t + dt / 2, dt / 2)
        stats["steps"] += 1
        f_new = st.f(two)
        for acc in accs.values():
            accumulate_psi(acc, t + dt / 2, f_half, dt / 2)
            accumulate_psi(acc, t + dt, f_new, dt / 2)
        return two, f_new

    t = 0.0
    for t_next in mesh[1:]:
        u, fu = advance(u, fu, t, float(t_next - t))
        t = float(t_next)
        field = GridField(grid, u)
        sup = np.abs(u).max()
        if sup > limit:
            raise BlowUp(f"sup norm {sup:.3e} exceeds {config.blowup_factor} x initial at t = {t}")
        traj.record(t, field, config.weight_orders, weights)
        if config.check_domain and traj.boundary[-1] > BOUNDARY_TOL:
            raise DomainTooSmall(f"boundary-shell mass fraction {traj.boundary[-1]:.3e} "
                                 f"at t = {t:.4g}; enlarge the box")
        if round(t, 9) in snap_set:
            snapshots[t] = field

    return SolveResult(config, traj, accs,
                       moment_table(u0, config.moment_order, source="u0"),
                       snapshots, GridField(grid, u), stats["steps"], stats["rejections"])


def expansion_spec(result, m, with_tail=True):
    """Freeze an ExpansionSpec of order m from a finished solve."""
    psi = {}
    for k in range(m // 2 + 1):
        if k not in result.psi:
            psi[k] = MomentTable.zeros(m - 2 * k, result.u0_moments.n, f"psi_{k}")
        else:
            psi[k] = result.psi[k].moments(m - 2 * k, with_tail=with_tail)
    u0m = result.u0_moments
    if u0m.m > m:
        u0m = MomentTable(u0m.source, {b: u0m[b] for b in mi.enumerate_upto(m, u0m.n)}, m, u0m.n)
    return ExpansionSpec(m, result.config.params.nu, u0m, psi, result.config.u0.grid)


def contraction_probe(params, u0, eps_grid, T_probe=10.0, dt0=0.01, ratio=1.05,
                      max_iter=60, tol=1e-12):
    """Picard iteration of the mild formulation for each amplitude eps.

    The iterate map is u -> E(t)(eps u0) + int_0^t E(t-s) f(u(s)) ds with the
    time integral taken by the exponential trapezoid rule on the mesh.  Each
    row reports eps, the decay constant
    M(eps) = max_{q in (1, inf)} sup_t (1+t)^{(n/2)(1-1/q)} ||u(t)||_q,
    whether the iteration converged, and the iteration count.
    """
    grid = u0.grid
    n = grid.n
    mesh = time_mesh(T_probe, dt0, ratio)
    base_hat = np.fft.fftn(u0.values)
    nu = params.nu
    rows = []
    prev_eps = -np.inf
    for eps in eps_grid:
        if eps < 0 or eps < prev_eps:
            raise ValueError("eps grid must be non-negative and ascending")
        prev_eps = eps
        free = np.array([np.fft.ifftn(eps * base_hat * _expo(grid, nu, t)) for t in mesh])
        u = free.copy()
        converged, it = False, 0
        for it in range(1, max_iter + 1):
            new = free.copy()
            D = np.zeros(grid.shape, dtype=np.complex128)
            f_prev = np.fft.fftn(params.f(u[0]))
            for i in range(1, len(mesh)):
                h = mesh[i] - mesh[i - 1]
                E = _expo(grid, nu, h)
                f_now = np.fft.fftn(params.f(u[i]))
                D = E * (D + 0.5 * h * f_prev) + 0.5 * h * f_now
                new[i] = free[i] + np.fft.ifftn(D)
                f_prev = f_now
            scale = max(np.abs(new).max(), 1e-300)
            diff = np.abs(new - u).max() / scale
            u = new
            if not np.all(np.isfinite(u)) or diff > 1e6:
                break
            if diff <= tol or scale == 1e-300:
                converged = True
                break
        M = 0.0
        if np.all(np.isfinite(u)):
            for q in (1.0, np.inf):
                for i, t in enumerate(mesh):
                    nq = lq_norm(GridField(grid, u[i]), q)
                    M = max(M, (1 + t) ** (n / 2 * (1 - 1 / q)) * nq)
        else:
            M = float("inf")
        rows.append({"eps": float(eps), "M": float(M), "converged": converged, "iterations": it})
    return rows
