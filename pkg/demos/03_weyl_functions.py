"""Weyl functions of the soliton Dirac system and their evolution in t.

weyl_direct takes the limit of Moebius images of W(r, conj z)^*; the GBDT
closed form gives an independent value.  weyl_evolve moves phi(0, z) to
phi(t, z) through R(0, t, z).  This is well conditioned in the sector
-pi/4 < arg z < 0 and badly conditioned far down the imaginary axis.
"""
import numpy as np

from zcf import darboux_weyl_function, mkdv_soliton, skew_reduction_node, weyl_direct, weyl_evolve

node = skew_reduction_node(np.array([[0.4 + 0.5j]]), np.array([[1.0, 1.0]]))
pot, field = mkdv_soliton(node)
oracle0 = darboux_weyl_function(field, 0.0)
oracle = darboux_weyl_function(field, 0.4)

for z in (1 - 2.5j, 2 - 2j, -2j):
    phi0, rep = weyl_direct(pot, 0.0, z)
    evolved = weyl_evolve(phi0, pot, 0.4, z)
    print(f"z = {z}: |direct - closed form| = {abs(phi0 - oracle0(z)).max():.1e}"
          f" (r = {rep.r_values[-1]:g}), |evolved - closed form(t=0.4)| = {abs(evolved - oracle(z)).max():.1e}")

# far below the sector the Moebius map in t expands by about exp(2 |z|^3 t)
z = -4j
phi0, _ = weyl_direct(pot, 0.0, z)
evolved = weyl_evolve(phi0, pot, 0.4, z)
print(f"z = -4i: growth factor exp(2*64*0.4) = {np.exp(51.2):.1e};"
      f" gap = {abs(evolved - oracle(z)).max():.1e}")
