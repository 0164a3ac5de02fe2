"""Recovering v from its Weyl function.

phi -> s, s' by a Fourier integral along Im z = eta, then the structured
operators S_l (which satisfy S_l >= I), the rows omega_2 and omega_1, and
finally v = omega_1' omega_2^*.
"""
import numpy as np

from zcf import darboux_weyl_function, mkdv_soliton, recover_potential, skew_reduction_node

node = skew_reduction_node(np.array([[0.4 + 0.5j]]), np.array([[1.0, 1.0]]))
pot, field = mkdv_soliton(node)
phi = darboux_weyl_function(field, 0.0)

# two error sources: the grid (O(h^2) trapezoid) and the truncated Fourier integral,
# which is widened until s moves by less than fourier_tol
for tol in (1e-4, 1e-8):
    print(f"fourier_tol = {tol:g}")
    for N in (50, 100, 200):
        res = recover_potential(phi, 1.0, N, M=pot.M, fourier_tol=tol)
        exact = pot.values(res.grid, 0 * res.grid)
        err = np.abs(res.v - exact)[1:-1].max()
        print(f"  N = {N:3d}: sup error {err:.2e}, min eig S_l {res.rows.diagnostics['min_eig'].min():.6f},"
              f" a used {res.kernel.a_used:g}")

print("v(x, 0) at x = 0, 0.5, 1:", np.round(res.v[[0, N // 2, N], 0, 0], 5))
print("exact             :", np.round(exact[[0, N // 2, N], 0, 0], 5))
