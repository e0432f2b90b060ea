"""Model parameters and the pointwise nonlinearity."""
from dataclasses import dataclass

import numpy as np

__all__ = ["Params", "NONLINEARITIES"]

NONLINEARITIES = ("power", "abs_power", "abs_power_u", "zero")


@dataclass(frozen=True)
class Params:
    """Parameters of  u_t - nu Lap u = f(u)  on R^n.

    ``kind`` selects f:

    * ``"power"``       lam * u**p  (integer p)
    * ``"abs_power"``   lam * |u|**p
    * ``"abs_power_u"`` lam * |u|**(p-1) * u
    * ``"zero"``        f = 0 (free evolution)

    ``K`` is the constant in |f(a) - f(b)| <= K(|a|^{p-1} + |b|^{p-1})|a - b|;
    when omitted it defaults to p|lam|, which is valid for every kind above.
    """

    n: int
    nu: complex
    lam: complex = -1.0
    p: float = 5.0
    kind: str = "abs_power_u"
    K: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "nu", complex(self.nu))
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "p", float(self.p))
        if self.nu.real <= 0:
            raise ValueError(f"Re nu must be positive, got nu = {self.nu}")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if self.kind not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.kind!r}; choose from {NONLINEARITIES}")
        if self.kind == "power" and self.p != int(self.p):
            raise ValueError("the 'power' nonlinearity needs an integer p")
        if self.K is None:
            object.__setattr__(self, "K", self.p * abs(self.lam))

    @property
    def sigma(self):
        """(n/2)(p-1) - 1, the excess decay of the nonlinear term."""
        return self.n / 2 * (self.p - 1) - 1

    @property
    def is_zero(self):
        return self.kind == "zero" or self.lam == 0

    def f(self, u):
        """Apply the nonlinearity pointwise to an array."""
        u = np.asarray(u)
        if self.is_zero:
            return np.zeros_like(u, dtype=np.complex128)
        if self.kind == "power":
            return self.lam * u ** int(self.p)
        a = np.abs(u)
        if self.kind == "abs_power":
            return self.lam * a**self.p
        return self.lam * a ** (self.p - 1) * u

    def with_(self, **kw):
        d = dict(n=self.n, nu=self.nu, lam=self.lam, p=self.p, kind=self.kind, K=None)
        d.update(kw)
        return Params(**d)
