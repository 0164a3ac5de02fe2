import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zcf.errors import DerivativeUnavailable, DomainError, PoleHit
from zcf.mkdv import build_mkdv_pair, constant_potential, signature
from zcf.pencil import (Domain2D, SpectralPencil, constant_pencil, eval_pencil,
                        pencil_derivative, zero_curvature_matrix,
                        zero_curvature_residual)

from .test_mkdv import xt_potential


def g_direct(v, z):
    """izj + V for p = 1, written out by hand."""
    return np.array([[1j * z, v], [-np.conj(v), -1j * z]])


def test_zero_providers_give_zero():
    zero = lambda x, t: np.zeros((2, 2))
    P = SpectralPencil.from_providers(2, [zero, zero], poles=[1.0], pole_coeffs=[[zero]])
    assert np.all(eval_pencil(P, 0.3, 0.2, 2 + 1j) == 0)


def test_mkdv_G_at_i_is_minus_j(zero_pair):
    G, _ = zero_pair
    assert np.allclose(eval_pencil(G, 0.0, 0.0, 1j), -signature(1))


def test_mkdv_G_constant_v_hand_value():
    G, _ = build_mkdv_pair(constant_potential(1.0))
    expect = np.array([[2j, 1], [-1, -2j]])
    assert np.allclose(eval_pencil(G, 0.4, 0.1, 2.0), expect, atol=1e-14)
    assert np.allclose(expect, g_direct(1.0, 2.0))


def test_sign_convention_random_points(soliton, soliton_pair, rng):
    pot, _ = soliton
    G, _ = soliton_pair
    for _ in range(100):
        x, t = rng.uniform(0, 3), rng.uniform(0, 1)
        z = complex(*rng.normal(size=2))
        v = pot.values(x, t)[0, 0]
        assert np.max(np.abs(eval_pencil(G, x, t, z) - g_direct(v, z))) < 1e-12


def test_pole_hit_and_domain():
    P = constant_pencil([np.eye(2)], poles=[1 + 1j], pole_matrices=[[np.eye(2)]],
                        domain=Domain2D(1.0, 1.0))
    with pytest.raises(PoleHit):
        eval_pencil(P, 0.5, 0.5, 1 + 1j + 1e-10)
    with pytest.raises(DomainError):
        eval_pencil(P, 1.5, 0.5, 0.0)
    eval_pencil(P, 1.0, 1.0, 0.0)  # closed rectangle


def test_duplicate_poles_rejected():
    with pytest.raises(ValueError):
        constant_pencil([np.eye(2)], poles=[1, 1], pole_matrices=[[np.eye(2)], [np.eye(2)]])


def test_pole_laurent_consistency():
    q = np.array([[1.0, 2.0], [0.5j, -1.0]])
    P = constant_pencil([np.eye(2), np.ones((2, 2))], poles=[0.5], pole_matrices=[[q]])
    lim = [(d * eval_pencil(P, 0, 0, 0.5 + d)) for d in (1e-3, 1e-4)]
    # (z - c) G = -q - (z - c)(q_0 + z q_1): error linear in |z - c|
    err = [np.max(np.abs(a + q)) for a in lim]
    assert err[1] < 1e-3
    assert err[0] / err[1] == pytest.approx(10.0, rel=1e-2)


def test_constant_commuting_pencils_zero_curvature():
    G = constant_pencil([np.diag([1.0, 2.0]), np.diag([0.5j, -1.0])])
    F = constant_pencil([np.diag([3.0, -1.0])])
    assert zero_curvature_residual(G, F, 0.2, 0.3, 1 - 2j) == 0.0


def test_soliton_pair_is_compatible_with_fd(soliton):
    # drop the analytic derivative providers so the finite-difference path is exercised
    pot, _ = soliton
    G, F = build_mkdv_pair(pot)
    Gfd = SpectralPencil(G.m, G.r, G.coefficients, h_fd=1e-4)
    Ffd = SpectralPencil(F.m, F.r, F.coefficients, h_fd=1e-4)
    for z in (1 - 2j, 0.3 + 0.5j, -2.0):
        assert zero_curvature_residual(Gfd, Ffd, 0.8, 0.4, z) < 1e-5


def test_incompatible_pair_detected():
    G, F = build_mkdv_pair(xt_potential())
    assert zero_curvature_residual(G, F, 0.7, 0.6, 0.9 - 0.4j) > 1e-2


def test_one_sided_stencil_and_unavailable():
    dom = Domain2D(1.0, 1.0)
    f = lambda x, t: np.array([[np.sin(x) * t, 0], [0, np.cos(t)]])
    P = SpectralPencil.from_providers(2, [f], domain=dom)
    d = pencil_derivative(P, 0.0, 0.5, 0.0, "x")
    assert np.allclose(d, -np.array([[np.cos(0.0) * 0.5, 0], [0, 0]]), atol=1e-8)
    Q = SpectralPencil.from_providers(2, [f], domain=dom, one_sided=False)
    with pytest.raises(DerivativeUnavailable):
        pencil_derivative(Q, 0.0, 0.5, 0.0, "x")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_residual_conjugates_with_constant_similarity(seed):
    r = np.random.default_rng(seed)
    T = r.normal(size=(2, 2)) + 1j * r.normal(size=(2, 2)) + 2 * np.eye(2)
    Ti = np.linalg.inv(T)
    G, F = build_mkdv_pair(xt_potential())

    def conj(P):
        def c(x, t):
            poly, poles = P.coefficients(x, t)
            return T @ poly @ Ti, poles

        def d(axis):
            def f(x, t):
                poly, poles = P.coefficient_derivative(x, t, axis)
                return T @ poly @ Ti, poles
            return f
        return SpectralPencil(P.m, P.r, c, t_derivative=d("t"), x_derivative=d("x"))

    z = complex(*r.normal(size=2))
    a = zero_curvature_matrix(G, F, 0.5, 0.5, z)
    b = zero_curvature_matrix(conj(G), conj(F), 0.5, 0.5, z)
    assert np.max(np.abs(b - T @ a @ Ti)) < 1e-10 * max(1.0, np.abs(a).max() * np.linalg.cond(T))
    # unitary similarity leaves the norm itself unchanged
    U = np.linalg.qr(T)[0]
    T, Ti = U, U.conj().T
    assert zero_curvature_residual(conj(G), conj(F), 0.5, 0.5, z) == pytest.approx(
        zero_curvature_residual(G, F, 0.5, 0.5, z), rel=1e-10)
