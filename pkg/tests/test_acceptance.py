"""Acceptance criteria 1-8.  Each test prints one ACCEPTANCE line with PASS or FAIL.

Run directly (python3 tests/test_acceptance.py) or under pytest.
"""
import time

import numpy as np
import pytest

from zcf.gbdt import (SNode, build_field, darboux_inverse, darboux_matrix, darboux_weyl_function,
                      kronecker_compat_check, mkdv_soliton, skew_reduction_node,
                      transformed_pencils, verify_darboux_ode, verify_transformed_zero_curvature)
from zcf.inverse import (build_Sl_family, fourier_s, kernel_matrix, recover_omega1, recover_omega2,
                         recover_v)
from zcf.mkdv import (PropertyJPair, build_mkdv_pair, check_R_conjugate_inverse,
                      check_R_j_contractive, check_W_j_expansive, in_contractive_sector,
                      mkdv_residual, weyl_direct, weyl_evolve, zero_potential)
from zcf.pencil import Domain2D
from zcf.propagator import factorization_residual

try:
    from .test_mkdv import xt_potential
except ImportError:
    from test_mkdv import xt_potential

A_ONE = np.array([[0.4 + 0.5j]])
PI_ONE = np.array([[1.0, 1.0]])
A_TWO = np.diag([0.3 + 0.6j, -0.2 + 0.4j])
PI_TWO = np.array([[1.0, 0.5], [0.7, 1.0]])


def one_soliton(domain=None):
    return mkdv_soliton(skew_reduction_node(A_ONE, PI_ONE), domain or Domain2D(np.inf, 1.0))


def line(k, ok, detail):
    msg = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(msg)
    return msg


def emit(capsys, k, ok, detail):
    if capsys is None:
        return line(k, ok, detail)
    with capsys.disabled():
        return line(k, ok, detail)


# 1 ------------------------------------------------------------- factorization

Z_FACTOR = [complex(a, b) for a in (-1.0, -0.3, 0.3, 1.0) for b in (-1.2, -1.6, -2.0)]
P_FACTOR = [(0.5, 0.25), (1.0, 0.5), (2.0, 1.0), (1.5, 0.8)]


def criterion_1():
    start = time.perf_counter()
    pot, _ = one_soliton(Domain2D(2.0, 1.0))
    G, F = build_mkdv_pair(pot)
    assert all(z.imag < -pot.M for z in Z_FACTOR) and len(Z_FACTOR) == 12
    worst = max(factorization_residual(G, F, x, t, z, steps=2000) for x, t in P_FACTOR for z in Z_FACTOR)
    elapsed = time.perf_counter() - start
    # step-doubling order, measured where truncation dominates roundoff
    ratios = []
    for z in Z_FACTOR:
        r = [factorization_residual(G, F, 2.0, 1.0, z, steps=n) for n in (50, 100, 200)]
        ratios += [r[0] / r[1], r[1] / r[2]]
    ok = worst <= 1e-6 and 12 <= min(ratios) and max(ratios) <= 20 and elapsed < 30
    return ok, (f"max residual {worst:.2e} (<=1e-6), doubling ratios [{min(ratios):.1f}, "
                f"{max(ratios):.1f}] (~16), runtime {elapsed:.1f}s (<30)")


# 2 ------------------------------------------------------------- Weyl evolution

Z_WEYL = [-4j, -6j, 1 - 5j]


def criterion_2():
    pot, _ = one_soliton()
    gaps = []
    for z in Z_WEYL:
        phi0, _ = weyl_direct(pot, 0.0, z)
        direct, _ = weyl_direct(pot, 0.4, z)
        try:
            gaps.append(float(np.max(np.abs(direct - weyl_evolve(phi0, pot, 0.4, z)))))
        except Exception as exc:  # the Moebius denominator may be numerically singular here
            gaps.append(float("inf"))
            print(f"  weyl_evolve at z={z}: {type(exc).__name__}")
    other = PropertyJPair(lambda z: np.eye(1), lambda z: (z / abs(z) + 2) * np.eye(1))
    pair_gap = 0.0
    for z in Z_WEYL:
        assert other.check(z)
        a, _ = weyl_direct(pot, 0.0, z)
        b, _ = weyl_direct(pot, 0.0, z, pair=other)
        pair_gap = max(pair_gap, float(np.max(np.abs(a - b))))
    ok_evolve = max(gaps) <= 1e-4
    ok_pair = pair_gap <= 2e-6
    return ok_evolve and ok_pair, (
        f"evolve gaps {', '.join(f'{g:.1e}' for g in gaps)} (<=1e-4: {ok_evolve}); "
        f"pair independence {pair_gap:.1e} (<=2e-6: {ok_pair})")


# 3 ------------------------------------------------------------- S_l >= I

def raw_double_integral(sp, h):
    """Unsymmetrized trapezoid of 1/2 int_{|x-r|}^{x+r} s'((lam+x-r)/2) s'((lam+r-x)/2)^* dlam,
    node pair by node pair, lambda step 2h so both arguments fall on grid nodes."""
    n = len(sp)
    K = np.zeros((n, n), complex)
    for i in range(n):
        for k in range(n):
            m = min(i, k)
            if m == 0:
                continue
            a = sp[i - m:i + 1]          # s'((lam + x - r)/2) for lam = |x - r| + 2 q h
            b = sp[k - m:k + 1]          # s'((lam + r - x)/2)
            f = a * np.conj(b)
            K[i, k] = 0.5 * 2 * h * (f.sum() - 0.5 * (f[0] + f[-1]))
    return K


def criterion_3():
    pot, field = one_soliton()
    k = fourier_s(darboux_weyl_function(field, 0.0), 1.0, -2 * pot.M - 1, 40, 200, M=pot.M)
    raw = raw_double_integral(k.s_prime_values[:, 0, 0], k.h)
    route_gap = float(np.max(np.abs(raw - kernel_matrix(k))))
    w = np.full(k.N + 1, k.h)
    w[0] = w[-1] = 0.5 * k.h
    herm = 0.0
    mins = []
    for op in build_Sl_family(k, min_eig_floor=-np.inf):
        L = len(op.grid)
        wl = w[:L].copy()
        wl[-1] = 0.5 * k.h
        H = np.eye(L) + np.sqrt(wl)[:, None] * raw[:L, :L] * np.sqrt(wl)[None, :]
        herm = max(herm, float(np.max(np.abs(H - H.conj().T))), op.hermitian_defect())
        mins.append(op.min_eigenvalue())
    ok = herm <= 1e-10 and min(mins) >= 1 - 1e-4 and route_gap <= 1e-12
    return ok, (f"Hermitian defect {herm:.1e} (<=1e-10), min eig {min(mins):.6f} (>=1-1e-4) "
                f"over {len(mins)} l-nodes, direct vs assembled kernel {route_gap:.1e}")


# 4 ------------------------------------------------------------- inverse round trip

def criterion_4():
    pot, field = one_soliton()
    phi = darboux_weyl_function(field, 0.0)
    errs = []
    for N, a in ((100, 40.0), (200, 80.0), (400, 160.0)):
        k = fourier_s(phi, 1.0, -2 * pot.M - 1, a, N, M=pot.M, max_doublings=0)
        v = recover_v(recover_omega1(recover_omega2(k)))
        exact = pot.values(k.grid, np.zeros_like(k.grid))
        errs.append(float(np.max(np.abs(v - exact)[1:-1])))
    ok = errs[0] <= 1e-2 and errs[0] > errs[1] > errs[2]
    return ok, "interior sup errors " + " > ".join(f"{e:.2e}" for e in errs) + " (first <=1e-2, monotone)"


# 5 ------------------------------------------------------------- GBDT identities

def criterion_5():
    node = skew_reduction_node(A_ONE, PI_ONE)
    seed = build_mkdv_pair(zero_potential(1))
    dom = Domain2D(2.0, 1.0)
    flowed = build_field(node, *seed, dom.x_grid(), dom.t_grid())
    pot, exact = mkdv_soliton(node, dom)
    drift = max(flowed.identity_drift(), exact.identity_drift())
    rng = np.random.default_rng(5)
    inv = 0.0
    for _ in range(100):
        n, m = rng.integers(1, 4), 2 * rng.integers(1, 3)
        A1 = 0.5 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) + 1j * np.eye(n)
        A2 = 0.5 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) - 1j * np.eye(n)
        P1 = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
        P2 = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
        nd = SNode.from_sylvester(A1, A2, P1, P2)
        z = complex(*rng.normal(size=2))
        inv = max(inv, float(np.linalg.norm(darboux_matrix(nd, z) @ darboux_inverse(nd, z) - np.eye(m), 2)))
    zs = [1 - 2j, 0.3 + 0.4j, -1.5j]
    pts = [(0.5, 0.3), (1.0, 0.5), (1.5, 0.7)]
    g8 = max(verify_darboux_ode(exact, P, x, t, z, h=1e-4, axis=ax)
             for x, t in pts for z in zs for P, ax in ((seed[0], "x"), (seed[1], "t")))
    Gt, Ft = transformed_pencils(exact, *seed)
    zc = max(verify_transformed_zero_curvature(exact, Gt, Ft, x, t, z)[0] for x, t in pts for z in zs)
    ok = drift <= 1e-8 and inv <= 1e-10 and g8 <= 1e-5 and zc <= 1e-5
    return ok, (f"node identity {drift:.1e} (<=1e-8), w_A w_A^-1 {inv:.1e} (<=1e-10), "
                f"Darboux ODE {g8:.1e} (<=1e-5), transformed zero curvature {zc:.1e} (<=1e-5)")


# 6 ------------------------------------------------------------- mKdV exactness

def criterion_6():
    one, _ = one_soliton()
    two, _ = mkdv_soliton(skew_reduction_node(A_TWO, PI_TWO), Domain2D(np.inf, 1.0))
    pts = [(x, t) for x in (0.3, 1.0, 2.0, 3.5) for t in (0.1, 0.5, 0.9)]
    res = [max(mkdv_residual(pot, x, t, h=1e-3) for x, t in pts) for pot in (one, two)]
    return max(res) <= 1e-4, f"one-soliton {res[0]:.1e}, two-soliton {res[1]:.1e} (<=1e-4, h=1e-3)"


# 7 ------------------------------------------------------------- j-structure

def criterion_7():
    pot, _ = one_soliton()
    zW = [-1.5j, 0.7 - 1.3j, -2 - 2j, -3j]
    wmin = min(check_W_j_expansive(pot, x, t, z) for x, t in ((0.5, 0.2), (1.5, 0.6), (3.0, 0.9)) for z in zW)
    M1 = 2.0
    zR = [2.5 - 2.1j, 3 - 2.5j, 4 - 3j]
    assert all(in_contractive_sector(z, M1) for z in zR)
    rmax = max(check_R_j_contractive(pot, x, t, z, M1=M1)
               for x, t in ((0.0, 0.05), (0.5, 0.1), (1.5, 0.08)) for z in zR)
    conj = max(check_R_conjugate_inverse(pot, x, t, z)
               for x, t in ((0.0, 0.5), (1.0, 0.3)) for z in (1 - 3j, 0.5 + 0.5j, -2 - 1j))
    ok = wmin >= -1e-8 and rmax <= 1e-8 and conj <= 1e-7
    return ok, (f"min eig(W*jW-j) {wmin:.1e} (>=-1e-8), max eig(R*jR-j) {rmax:.1e} (<=1e-8), "
                f"||R(zbar)*R(z)-I|| {conj:.1e} (<=1e-7)")


# 8 ------------------------------------------------------------- Kronecker compatibility

def criterion_8():
    pot, _ = one_soliton()
    A1 = np.random.default_rng(8).normal(size=(2, 2)) + 1j * np.random.default_rng(9).normal(size=(2, 2))
    pts = [(0.4, 0.2), (1.0, 0.5), (1.8, 0.9)]
    good = max(kronecker_compat_check(*build_mkdv_pair(pot), A1, x, t) for x, t in pts)
    bad = min(kronecker_compat_check(*build_mkdv_pair(xt_potential()), A1, x, t) for x, t in pts)
    return good <= 1e-5 and bad > 1e-3, f"compatible {good:.1e} (<=1e-5), incompatible {bad:.1e} (>1e-3)"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_acceptance(k, capsys):
    ok, detail = CRITERIA[k]()
    msg = emit(capsys, k, ok, detail)
    assert ok, msg


if __name__ == "__main__":
    for k, fn in CRITERIA.items():
        line(k, *fn())
