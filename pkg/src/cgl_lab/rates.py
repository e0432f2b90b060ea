"""Decay-rate fits, remainder-regime classification and the limiting constant."""
import csv
from dataclasses import dataclass, asdict
from fractions import Fraction

import numpy as np

from .errors import OutOfTheoremScope
from .field import lq_norm, fmt
from . import multiindex as mi
from .moments import moment_table
from .profiles import ExpansionSpec, assemble_A, layer, layer_coefficients

__all__ = [
    "Fit", "RateReport", "fit_decay", "fit_log_corrected", "sigma", "classify_regime",
    "scaled_exponent", "remainder_series", "optimal_constant", "activation_scan", "write_reports",
]


@dataclass(frozen=True)
class Fit:
    slope: float
    stderr: float
    intercept: float
    t_lo: float
    t_hi: float
    count: int

    @property
    def narrow(self):
        return self.t_hi < 100 * self.t_lo


def fit_decay(samples):
    """OLS slope of log(value) against log(t).

    Parameters
    ----------
    samples : iterable of (t, value)
        At least six points with positive values.

    Returns
    -------
    Fit
        Slope, its standard error from the residuals, and the window.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 6:
        raise ValueError("fit_decay needs at least 6 samples")
    t, v = arr[:, 0], arr[:, 1]
    if np.any(v <= 0) or np.any(t <= 0):
        raise ValueError("fit_decay needs positive times and values")
    x, y = np.log(t), np.log(v)
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = float(np.sqrt(s2 / sxx)) if sxx > 0 else float("inf")
    return Fit(float(coef[1]), stderr, float(coef[0]), float(t.min()), float(t.max()), len(t))


def fit_log_corrected(samples):
    """Fit value = a t^s log(2+t): the slope of value / log(2+t)."""
    arr = np.asarray(list(samples), dtype=float)
    return fit_decay(zip(arr[:, 0], arr[:, 1] / np.log(2 + arr[:, 0])))


def sigma(n, p):
    return n / 2 * (p - 1) - 1


def _frac(x):
    return Fraction(x).limit_denominator(10**6)


def classify_regime(n, p, m):
    """Remainder regime for ||u - A_m|| and its predicted extra decay exponent.

    Thresholds are compared in exact rational arithmetic:
    p must exceed 1 + (m+2)/n; below 1 + (m+3)/n the extra slope is
    -(sigma - m/2), at equality a logarithm appears, above it the slope is -1/2.
    """
    pf = _frac(p)
    low = 1 + Fraction(m + 2, n)
    mid = 1 + Fraction(m + 3, n)
    if pf <= low:
        raise OutOfTheoremScope(f"p = {p} <= 1 + (m+2)/n = {float(low)} for n = {n}, m = {m}")
    s = Fraction(n, 2) * (pf - 1) - 1
    if pf < mid:
        return "sub", -float(s - Fraction(m, 2))
    if pf == mid:
        return "log", -0.5
    return "sharp", -0.5


def scaled_exponent(n, q, m):
    """Exponent (n/2)(1 - 1/q) + m/2 that normalizes ||u - A_m||_q."""
    inv = 0.0 if np.isinf(q) else 1.0 / q
    return n / 2 * (1 - inv) + m / 2


def remainder_series(snapshots, spec, q, m=None, t_min=0.0):
    """Scaled remainders t^{(n/2)(1-1/q)+m/2} ||u(t) - A_m(t)||_q at snapshot times."""
    m = spec.m if m is None else m
    n = spec.n
    out = []
    for t in sorted(snapshots):
        if t <= 0 or t < t_min:
            continue
        u = snapshots[t]
        r = lq_norm(u - assemble_A(spec, t, u.grid), q)
        out.append((float(t), t ** scaled_exponent(n, q, m) * r))
    return out


@dataclass
class RateReport:
    tag: str
    q: float
    m: int
    regime: str
    predicted: float
    fitted: float
    stderr: float
    t_lo: float
    t_hi: float
    limit_measured: float = float("nan")
    limit_target: float = float("nan")
    gap: float = float("nan")
    narrow: bool = False
    activated: bool | None = None


def optimal_constant(snapshots, spec_next, q, n, p, t_lo=10.0):
    """Compare the limit of the order-(m+1) scaled remainder with its prediction.

    ``spec_next`` is the frozen spec of order m+1; the remainder is taken
    against A_m.  The measured limit is the mean over the last decade of
    snapshot times, reported only when the series is flat there (|slope| <
    0.05); a series still decaying there is reported with limit 0.  The
    target is ||layer(m+1, 1)||_q.
    """
    m = spec_next.m - 1
    regime, pred = classify_regime(n, p, m)
    if regime != "sharp":
        raise OutOfTheoremScope("the limiting constant is characterized only in the sharp regime")
    spec_m = ExpansionSpec(m, spec_next.nu, spec_next.u0_moments, spec_next.psi_moments,
                           spec_next.grid)
    series = remainder_series(snapshots, spec_m, q, m=m + 1, t_min=t_lo)
    ts = np.array([s[0] for s in series])
    vs = np.array([s[1] for s in series])
    T = ts.max()
    last = ts >= T / 10
    trend = fit_decay(zip(ts[last], vs[last])).slope if last.sum() >= 6 and np.all(vs[last] > 0) else float("nan")
    if abs(trend) < 0.05:
        measured = float(vs[last].mean())
    elif trend <= -0.05:
        # a clean power-law decay over the last decade: the limit is zero
        measured = 0.0
    else:
        measured = float("nan")
    grid = next(iter(snapshots.values())).grid
    target = lq_norm(layer(spec_next, m + 1, 1.0, grid), q)
    coeffs = layer_coefficients(spec_next, m + 1)
    activated = any(abs(c) > 1e-10 for c in coeffs.values())
    gap = abs(measured / target - 1) if target > 0 else float("nan")
    return {"measured": measured, "target": target, "gap": gap, "trend": trend,
            "activated": activated, "series": series}


def activation_scan(params, phi, eps_grid, T_max=100.0, **solve_kw):
    """First-order combined coefficients for u0 = eps * phi over an ascending eps grid.

    For every eps the nonlinear problem is solved to T_max and, for each
    |alpha| = 1, the combined coefficient c = eps M_alpha(phi) + M_alpha(psi_0)
    is compared with eps |M_alpha(phi)| / 2.  The correction |M_alpha(psi_0)|
    is reported so that its eps^p scaling can be checked.  ``threshold`` is the
    largest eps up to which the inequality holds without interruption.
    """
    from .solver import SolveConfig, solve

    n = phi.grid.n
    base = moment_table(phi, 1, source="phi")
    alphas = mi.enumerate_order(1, n)
    rows = []
    threshold = None
    broken = False
    for eps in eps_grid:
        res = solve(SolveConfig(params, phi * eps, T_max=T_max, psi_orders=[0],
                                moment_order=1, **solve_kw))
        psi = res.psi[0].moments(1)
        ok = True
        for a in alphas:
            lin = eps * base[a]
            coeff = lin + psi[a]
            holds = bool(abs(coeff) >= 0.5 * abs(lin))
            ok &= holds
            rows.append({"eps": float(eps), "alpha": a, "coefficient": complex(coeff),
                         "linear": complex(lin), "correction": float(abs(psi[a])), "holds": holds})
        if ok and not broken:
            threshold = float(eps)
        broken |= not ok
    return {"rows": rows, "threshold": threshold}


def write_reports(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        cols = ["tag", "q", "m", "regime", "predicted", "fitted", "stderr", "t_lo", "t_hi",
                "limit_measured", "limit_target", "gap"]
        w.writerow(cols)
        for r in reports:
            d = asdict(r)
            d["q"] = "inf" if np.isinf(r.q) else r.q
            w.writerow([d[c] if isinstance(d[c], str) else fmt(d[c]) for c in cols])
