import numpy as np
import pytest

from zcf.errors import EtaViolation, GridTooCoarse, PhaseJump, TailTooFat
from zcf.gbdt import darboux_weyl_function
from zcf.inverse import (BlockRows, TransformKernel, build_Sl, build_Sl_family, derivative_4th,
                         fourier_s, kernel_matrix, recover_omega1, recover_omega2,
                         recover_potential, recover_v)
from zcf.mkdv import build_mkdv_pair
from zcf.propagator import integrate_x


def constant_v_weyl(c):
    """Weyl function of v = c on the half-line: ic / (z + sqrt(z^2 + |c|^2)), root ~ z."""
    def phi(z):
        z = np.asarray(z, complex)
        q = z * np.sqrt(1 + abs(c) ** 2 / z ** 2)
        return (1j * c / (z + q))[..., None, None]
    return phi


def flat_kernel(sigma, l=1.0, N=40):
    xs = np.linspace(0, l, N + 1)
    sp = np.full((N + 1, 1, 1), sigma, complex)
    return TransformKernel(l, xs, sigma * xs[:, None, None], sp)


def test_zero_weyl_function():
    k = fourier_s(lambda z: np.zeros(np.shape(z) + (1, 1)), 1.0, -1.0, 20, 20)
    assert np.abs(k.s_values).max() == 0.0 and np.abs(k.s_prime_values).max() == 0.0
    rows = recover_omega1(recover_omega2(k))
    assert np.allclose(rows.omega2, [[0, 1]]) and np.allclose(rows.omega1, [[1, 0]])
    assert np.abs(recover_v(rows)).max() == 0.0


def test_c_over_z_transform():
    # closing the contour upward around z = 0: s(x) = -2icx, s'(x) = -2ic
    c = 0.7 - 0.2j
    k = fourier_s(lambda z: c / np.asarray(z)[..., None, None], 1.5, -1.0, 20, 30, fourier_tol=1e-7)
    x = k.grid
    assert np.abs(k.s_values[:, 0, 0] - (-2j * c * x)).max() < 1e-6
    assert np.abs(k.s_prime_values[:, 0, 0] - (-2j * c)).max() < 1e-6
    assert k.s0_defect < 1e-6


def test_eta_independence(soliton):
    pot, field = soliton
    phi = darboux_weyl_function(field, 0.0)
    a = fourier_s(phi, 1.0, -3.0, 40, 50, M=pot.M, fourier_tol=1e-7)
    b = fourier_s(phi, 1.0, -4.5, 40, 50, M=pot.M, fourier_tol=1e-7)
    assert np.abs(a.s_values - b.s_values).max() <= 1e-4
    assert np.abs(a.s_prime_values - b.s_prime_values).max() <= 1e-4


def test_min_kernel():
    sigma = 0.8 + 0.3j
    k = flat_kernel(sigma)
    x = k.grid
    assert np.allclose(kernel_matrix(k), abs(sigma) ** 2 * np.minimum.outer(x, x), atol=1e-13)


def test_zero_s_prime_gives_identity():
    k = flat_kernel(0.0)
    ops = list(build_Sl_family(k))
    assert len(ops) == k.N
    assert all(np.array_equal(op.matrix, np.eye(len(op.grid))) for op in ops)


def test_structured_operator_hermitian_positive(soliton):
    pot, field = soliton
    k = fourier_s(darboux_weyl_function(field, 0.0), 1.0, -3.0, 40, 50, M=pot.M)
    op = build_Sl(k)
    assert op.hermitian_defect() == 0.0
    assert op.min_eigenvalue() >= 1 - 1e-10
    with pytest.raises(GridTooCoarse):
        build_Sl(k, min_eig_floor=op.min_eigenvalue() + 0.1)


def test_omega_rows_match_forward_solution(soliton):
    pot, field = soliton
    res = recover_potential(darboux_weyl_function(field, 0.0), 1.0, 100, M=pot.M)
    d = res.rows.orthonormality_defects()
    assert d["w1w1"] < 1e-12 and d["w1w2"] < 1e-6
    # omega2 omega2^* = I holds up to the O(h^2) trapezoid error of the S_l solves
    finer = recover_potential(darboux_weyl_function(field, 0.0), 1.0, 200, M=pot.M)
    d2 = finer.rows.orthonormality_defects()
    assert d["w2w2"] < 2e-5 and d["w2w2"] / d2["w2w2"] > 3.5
    # [omega1; omega2] is W(x, z = 0) of the recovered Dirac system
    G, _ = build_mkdv_pair(pot)
    W = integrate_x(G, 0.0, 0.0, 1.0, 100).matrices
    assert np.abs(res.rows.omega2 - W[:, 1:]).max() < 1e-4
    assert np.abs(res.rows.omega1 - W[:, :1]).max() < 1e-4
    assert res.rows.diagnostics["min_eig"].min() >= 1 - 1e-10


def test_constant_v_round_trip():
    c = 0.5 + 0.2j
    res = recover_potential(constant_v_weyl(c), 1.0, 80, M=abs(c))
    assert np.abs(res.v[:, 0, 0] - c).max() < 1e-3


def test_derivative_4th_order():
    x = np.linspace(0, 1, 41)
    err = np.abs(derivative_4th(np.sin(3 * x), x[1]) - 3 * np.cos(3 * x)).max()
    assert err < 5e-5
    err2 = np.abs(derivative_4th(np.sin(3 * x[::2]), 2 * x[1]) - 3 * np.cos(3 * x[::2])).max()
    assert err2 / err > 12


def test_guards(soliton):
    pot, field = soliton
    phi = darboux_weyl_function(field, 0.0)
    with pytest.raises(EtaViolation):
        fourier_s(phi, 1.0, -1.5, 40, 20, M=pot.M)
    with pytest.raises(TailTooFat):
        fourier_s(lambda z: np.exp(-1j * np.asarray(z))[..., None, None], 1.0, -1.0, 10, 20,
                  fourier_tol=1e-12, max_doublings=2)
    w2 = np.array([[[0, 1]], [[1, 0]]], complex)
    with pytest.raises(PhaseJump):
        recover_omega1(BlockRows(np.array([0.0, 0.1]), omega2=w2))
