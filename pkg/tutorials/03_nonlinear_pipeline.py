# coding: utf-8

# # Small solutions of a Ginzburg-Landau equation
#
# u_t - nu Lap u = lam |u|^4 u in one dimension, with small Gaussian data.
# The solution decays like a free solution, and its large-time profile A_0
# is built from the moments of u0 and of psi_0 = int_0^oo f(u(s)) ds.
# Runs in a few seconds.

# In[1]:

import numpy as np

from cgl_lab import rates, solver
from cgl_lab.field import Grid
from cgl_lab.params import Params
from cgl_lab.samples import shifted_gaussian

grid = Grid(1, 480.0, 4096)
params = Params(1, 1 + 0.5j, lam=-1, p=5, kind="abs_power_u")
u0 = shifted_gaussian(grid, 1.0, 1.0, amplitude=0.05)
cfg = solver.SolveConfig(params, u0, T_max=400.0, weight_orders=[(1,)], psi_orders=[0],
                         moment_order=1, snapshot_times=solver.dyadic_times(400.0, 4))
res = solver.solve(cfg)
print(res.steps, "steps,", res.rejections, "rejected")


# Decay exponents of ||u(t)||_q against the free values -(1/2)(1 - 1/q).

# In[2]:

t = np.array(res.trajectory.times)
late = t >= 10
for q in (1.0, 2.0, np.inf):
    _, v = res.trajectory.series(q)
    fit = rates.fit_decay(zip(t[late], v[late]))
    print(f"q={q}: slope {fit.slope:+.4f} +- {fit.stderr:.1e}")


# The accumulated nonlinear mass psi_0 and its tail estimate.

# In[3]:

acc = res.psi[0]
print("||psi_0||_1", acc.l1, " tail", acc.tail_bound, " tail exponent", acc.tail_exponent)


# Remainder u - A_0: the regime is "sharp", so the scaled remainder decays like t^{-1/2}
# and, rescaled by t^{1/2}, tends to the norm of the first layer.

# In[4]:

print(rates.classify_regime(1, 5.0, 0))
spec0 = solver.expansion_spec(res, 0)
spec1 = solver.expansion_spec(res, 1)
for q in (1.0, np.inf):
    ser = rates.remainder_series(res.snapshots, spec0, q, t_min=10.0)
    oc = rates.optimal_constant(res.snapshots, spec1, q, 1, 5.0)
    print(f"q={q}: slope {rates.fit_decay(ser).slope:+.4f}  limit {oc['measured']:.6f}"
          f"  target {oc['target']:.6f}  gap {oc['gap']:.2e}")
