# coding: utf-8

# # Moment expansion of free solutions
#
# For large t, exp(t nu Lap) phi is approximated by a finite sum of Hermite
# functions weighted by the moments of phi.  The error of the order-m
# expansion, scaled by t^{(1/2)(1-1/q) + m/2}, decays like t^{-1/2}.

# In[1]:

import numpy as np

from cgl_lab.field import Grid, lq_norm
from cgl_lab.moments import moment_table
from cgl_lab.profiles import linear_profile, remainder_bound
from cgl_lab.rates import scaled_exponent
from cgl_lab.samples import even_packet, shifted_gaussian
from cgl_lab.semigroup import KernelSpec, apply

grid = Grid(1, 400.0, 4096)
nu = 1 + 0.5j
phi = shifted_gaussian(grid, nu, 1.0)
times = [4.0, 16.0, 64.0, 256.0]


# Scaled remainder next to its explicit upper bound, for m = 0, 1, 2 and q = 1.

# In[2]:

for m in (0, 1, 2):
    tab = moment_table(phi, m)
    rows = []
    for t in times:
        r = lq_norm(apply(phi, KernelSpec(nu, t)) - linear_profile((0,), m, t, tab, nu, grid), 1)
        rows.append((t, t ** scaled_exponent(1, 1, m) * r, remainder_bound((0,), m, t, phi, nu, 1)))
    slope = np.polyfit(np.log(times), np.log([s for _, s, _ in rows]), 1)[0]
    print(f"m={m}  slope {slope:+.4f}")
    for t, s, b in rows:
        print(f"   t={t:6.0f}  scaled {s:.3e}  bound {b:.3e}")


# When the next moments vanish, the remainder decays faster.  An even packet has
# no first moment, so the order-1 scaled remainder keeps falling.

# In[3]:

wide = Grid(1, 640.0, 8192)
even = even_packet(wide)
tab = moment_table(even, 1)
print("first moment", abs(tab[(1,)]))
vals = []
for t in 2.0 ** np.arange(2, 11):
    r = lq_norm(apply(even, KernelSpec(nu, t)) - linear_profile((0,), 1, t, tab, nu, wide), 1)
    vals.append(t ** scaled_exponent(1, 1, 1) * r)
print("ratios to the first value", np.round(np.array(vals) / vals[0], 4))
