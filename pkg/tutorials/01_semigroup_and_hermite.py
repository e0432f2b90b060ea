# coding: utf-8

# # The complex heat semigroup and its Hermite functions
#
# The semigroup exp(t nu Lap) with Re nu > 0 acts on periodic grids as a
# Fourier multiplier.  Its kernel is the complex Gaussian G_{t nu}, and the
# derivatives of G_nu are Hermite polynomials times G_nu.

# In[1]:

import numpy as np

from cgl_lab import hermite, multiindex as mi
from cgl_lab.field import Grid, integrate, lq_norm
from cgl_lab.samples import packet
from cgl_lab.semigroup import KernelSpec, apply, gaussian

grid = Grid(1, 80.0, 1024)
nu = 1 + 0.5j


# The kernel has unit mass for every t, and its peak for nu = 1, t = 1 is (4 pi)^{-1/2}.

# In[2]:

g1 = gaussian(KernelSpec(1.0, 1.0), grid)
print("peak", g1.values[grid.N // 2].real, "vs", (4 * np.pi) ** -0.5)
print("mass", integrate(gaussian(KernelSpec(nu, 3.0), grid)))


# Applying the semigroup twice is the same as applying it once for the summed time.

# In[3]:

phi = packet(grid, center=0.4, width=1.0, wavenumber=1.5)
twice = apply(apply(phi, KernelSpec(nu, 0.7)), KernelSpec(nu, 1.3))
once = apply(phi, KernelSpec(nu, 2.0))
print("composition error", lq_norm(twice - once, np.inf))


# Derivatives of the kernel: d^k G_nu = (-2)^{-k} h_{nu,k} G_nu.  The spectral
# derivative and the closed form agree to rounding.

# In[4]:

g = gaussian(KernelSpec(nu, 1.0), grid)
for k in range(5):
    spectral = apply(g, KernelSpec(nu, 0.0), (k,))
    closed = hermite.gauss_derivative(nu, (k,), grid)
    print(k, hermite.build(nu, (k,)).terms, lq_norm(spectral - closed, np.inf))


# The polynomials are orthogonal under the bilinear pairing with G_nu.  The Gram
# matrix is diagonal with entries (2/nu)^{|a|} a!.

# In[5]:

orders = mi.enumerate_upto(4, 1)
G = hermite.gram(nu, orders, grid)
np.set_printoptions(precision=3, suppress=True)
print(G)
print("off-diagonal max", np.abs(G - np.diag(np.diag(G))).max())
print("diagonal error", max(abs(G[i, i] - hermite.gram_diagonal(nu, a)) for i, a in enumerate(orders)))
