"""Moments M_beta(phi) = (1/beta!) int y^beta phi(y) dy and the spacetime
moments psi_k = int_0^inf s^k f(u(s)) ds accumulated during a solve."""
import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import multiindex as mi
from .field import GridField, check_boundary, fmt

__all__ = [
    "MomentTable", "PsiAccumulator", "moment", "moment_table",
    "accumulate_psi", "fit_power_tail", "write_csv", "read_csv",
]


# Fitted tail exponents closer than this to 1 are treated as divergent.
TAIL_MARGIN = 0.2


def moment(phi, beta):
    beta = mi.as_index(beta)
    check_boundary(phi, what=f"moment {beta}")
    w = mi.monomial(phi.grid.coords, beta)
    return complex((w * phi.values).sum() * phi.grid.cell / mi.factorial(beta))


@dataclass(frozen=True)
class MomentTable:
    source: str
    entries: dict
    m: int
    n: int

    def __post_init__(self):
        for beta in mi.enumerate_upto(self.m, self.n):
            if beta not in self.entries:
                raise ValueError(f"moment table {self.source!r} misses {beta}")

    def __getitem__(self, beta):
        return self.entries[mi.as_index(beta)]

    @classmethod
    def zeros(cls, m, n, source="zero"):
        return cls(source, {b: 0j for b in mi.enumerate_upto(m, n)}, m, n)

    def scaled(self, c, source=None):
        return MomentTable(source or self.source,
                           {b: c * v for b, v in self.entries.items()}, self.m, self.n)


def moment_table(phi, m, source="field"):
    n = phi.grid.n
    check_boundary(phi, what=source)
    entries = {}
    for beta in mi.enumerate_upto(m, n):
        w = mi.monomial(phi.grid.coords, beta)
        entries[beta] = complex((w * phi.values).sum() * phi.grid.cell / mi.factorial(beta))
    return MomentTable(source, entries, m, n)


def fit_power_tail(s, g, decades=1.0):
    """Exponent a of a least-squares fit |g(s)| ~ C s^{-a} over the last decades.

    Returns None when fewer than four usable samples fall in the window.
    """
    s = np.asarray(s, dtype=float)
    g = np.asarray(g)
    T = s[-1]
    mask = (s >= T / 10**decades) & (s > 0) & (np.abs(g) > 0)
    if mask.sum() < 4:
        return None
    A = np.vstack([np.ones(mask.sum()), np.log(s[mask])]).T
    coef, *_ = np.linalg.lstsq(A, np.log(np.abs(g[mask])), rcond=None)
    return -coef[1]


@dataclass
class PsiAccumulator:
    """Running trapezoid sum for psi_k plus its tail bookkeeping.

    ``moment_orders`` lists the multi-indices whose moments are tracked so
    that the unseen tail beyond the last time can be extrapolated scalar by
    scalar.
    """

    k: int
    grid: object
    moment_orders: list = dc_field(default_factory=list)
    values: np.ndarray = None
    last_s: float = None
    last_integrand: np.ndarray = None
    last_moments: dict = None
    times: list = dc_field(default_factory=list)
    norms: list = dc_field(default_factory=list)
    moment_history: list = dc_field(default_factory=list)
    acc_moments: dict = dc_field(default_factory=dict)
    tail_bound: float = 0.0
    tail_exponent: float = float("nan")

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.grid.shape, dtype=np.complex128)
        self.moment_orders = [mi.as_index(b) for b in self.moment_orders]
        self.acc_moments = {b: 0j for b in self.moment_orders}
        self._weights = {b: mi.monomial(self.grid.coords, b) / mi.factorial(b)
                         for b in self.moment_orders}

    @property
    def field(self):
        return GridField(self.grid, self.values)

    @property
    def l1(self):
        return float(np.abs(self.values).sum() * self.grid.cell)

    def _integrand_moments(self, g):
        cell = self.grid.cell
        return {b: complex((w * g).sum() * cell) for b, w in self._weights.items()}

    def update_tail(self):
        a = fit_power_tail(self.times, self.norms) if len(self.times) >= 4 else None
        if a is None or not np.isfinite(a):
            self.tail_bound, self.tail_exponent = float("inf"), float("nan")
            return
        self.tail_exponent = float(a)
        if a <= 1:
            self.tail_bound = float("inf")
        else:
            self.tail_bound = float(self.norms[-1] * self.times[-1] / (a - 1))

    def tail_moments(self):
        """Power-law extrapolation of each tracked moment beyond the last time."""
        out = {}
        if not self.moment_history:
            return {b: 0j for b in self.moment_orders}
        s = np.array(self.times)
        for b in self.moment_orders:
            g = np.array([h[b] for h in self.moment_history])
            a = fit_power_tail(s, g)
            if a is None or not np.all(np.abs(g) > 0):
                out[b] = 0j
            elif not np.isfinite(a) or a <= 1 + TAIL_MARGIN:
                # the integrand is not (or barely) integrable: no finite moment
                out[b] = complex("nan")
            else:
                out[b] = g[-1] * s[-1] / (a - 1)
        return out

    def moments(self, m=None, with_tail=True):
        """MomentTable of psi_k, complete to order m (default: all tracked)."""
        n = self.grid.n
        if m is None:
            m = max((mi.order(b) for b in self.moment_orders), default=0)
        tail = self.tail_moments() if with_tail else {}
        entries = {}
        for b in mi.enumerate_upto(m, n):
            if b not in self.acc_moments:
                raise KeyError(f"moment {b} of psi_{self.k} was not tracked")
            entries[b] = self.acc_moments[b] + tail.get(b, 0j)
        return MomentTable(f"psi_{self.k}", entries, m, n)

    def converged(self, rel=1e-3):
        l1 = self.l1
        return l1 == 0 or self.tail_bound < rel * l1


def accumulate_psi(acc, s, f_of_u, ds):
    """Trapezoid step for psi_k on [s - ds, s] with integrand s^k f(u(s)).

    The first call (with ds = 0) only records the integrand at s.  Moments of
    the integrand are tracked alongside so that tails can be extrapolated.
    """
    if acc.last_s is not None and s < acc.last_s:
        raise ValueError(f"psi accumulation times must be monotone ({s} < {acc.last_s})")
    vals = f_of_u.values if isinstance(f_of_u, GridField) else np.asarray(f_of_u)
    g = vals * (s ** acc.k if acc.k else 1.0)
    gm = acc._integrand_moments(g)
    if acc.last_integrand is not None and ds > 0:
        acc.values = acc.values + 0.5 * ds * (acc.last_integrand + g)
        for b in acc.moment_orders:
            acc.acc_moments[b] += 0.5 * ds * (acc.last_moments[b] + gm[b])
    acc.last_s = float(s)
    acc.last_integrand = g
    acc.last_moments = gm
    if s > 0:
        acc.times.append(float(s))
        acc.norms.append(float(np.abs(g).sum() * acc.grid.cell))
        acc.moment_history.append(gm)
        acc.update_tail()
    return acc


def write_csv(path, tables):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "re", "im", "source"])
        for t in tables:
            for beta in mi.enumerate_upto(t.m, t.n):
                v = t[beta]
                w.writerow([mi.label(beta), fmt(v.real), fmt(v.imag), t.source])


def read_csv(path):
    """Read back tables written by write_csv, keyed by source tag."""
    rows = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            beta = tuple(int(v) for v in r["beta"].split(";"))
            rows.setdefault(r["source"], {})[beta] = complex(float(r["re"]), float(r["im"]))
    out = {}
    for src, entries in rows.items():
        n = len(next(iter(entries)))
        m = max(sum(b) for b in entries)
        out[src] = MomentTable(src, entries, m, n)
    return out
