"""Recovery of the Dirac potential v from its Weyl function.

Pipeline: phi -> s, s' (Fourier transform along Im z = eta) -> structured
operators S_l -> omega_2 -> omega_1 -> v = omega_1' omega_2^*.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
import scipy.linalg as sla

from .errors import EtaViolation, GridTooCoarse, PhaseJump, SolveFailure, TailTooFat


def _eval_phi(phi, z):
    """Evaluate a Weyl function on an array of z; falls back to a loop."""
    z = np.asarray(z, dtype=complex)
    try:
        out = np.asarray(phi(z), dtype=complex)
        if out.ndim == z.ndim + 2 and out.shape[:z.ndim] == z.shape:
            return out
    except (TypeError, ValueError, KeyError):
        pass
    vals = [np.atleast_2d(np.asarray(phi(complex(zz)), dtype=complex)) for zz in z.ravel()]
    return np.array(vals).reshape(z.shape + vals[0].shape)


@dataclass(frozen=True)
class TransformKernel:
    l: float
    grid: np.ndarray
    s_values: np.ndarray
    s_prime_values: np.ndarray
    eta: float = 0.0
    a_used: float = 0.0
    s0_defect: float = 0.0

    @property
    def N(self):
        return len(self.grid) - 1

    @property
    def p(self):
        return self.s_values.shape[-1]

    @property
    def h(self):
        return self.grid[1] - self.grid[0]


def _tail_model(xi, eta, kappa, terms):
    z = xi + 1j * eta
    return np.stack([(z - 1j * kappa) ** -k for k in range(1, terms + 1)], axis=-1)


def _transform_once(phi, xs, eta, a, d_xi, terms):
    """s and s' on the nodes ``xs`` from the integral truncated to [-a, a].

    A fit c_k (z - i kappa)^{-k} of the integrand on |xi| in [a/2, a] is
    removed before quadrature and its full-line transform added back in
    closed form, which makes the truncation error decay like the fit residual.
    """
    kappa = -eta
    n = int(np.ceil(2 * a / d_xi))
    xi = np.linspace(-a, a, n + 1)
    w = np.full(n + 1, xi[1] - xi[0])
    w[0] = w[-1] = 0.5 * w[0]
    z = xi + 1j * eta
    ph = _eval_phi(phi, z / 2)
    p = ph.shape[-1]
    g = ph / z[:, None, None]
    flat = g.reshape(len(xi), p * p)

    coef = np.zeros((terms, p * p), complex)
    if terms:
        sel = np.abs(xi) >= a / 2
        B = _tail_model(xi[sel], eta, kappa, terms)
        scale = np.abs(B).max(axis=0)
        coef = np.linalg.lstsq(B / scale, flat[sel], rcond=None)[0] / scale[:, None]
        flat = flat - _tail_model(xi, eta, kappa, terms) @ coef

    E = np.exp(1j * np.outer(xs, xi)) * w
    amp = np.exp(-eta * xs)[:, None]
    s = 1j / (2 * np.pi) * amp * (E @ flat)
    sp = 1j / (2 * np.pi) * amp * (E @ (flat * (1j * z)[:, None]))
    decay = np.exp(-kappa * xs)
    for k in range(1, terms + 1):
        ix = (1j * xs) ** (k - 1)
        s = s - (ix * decay / factorial(k - 1))[:, None] * coef[k - 1]
        dix = 1j * (k - 1) * (1j * xs) ** (k - 2) if k > 1 else np.zeros_like(xs)
        sp = sp - ((dix - kappa * ix) * decay / factorial(k - 1))[:, None] * coef[k - 1]
    return s.reshape(len(xs), p, p), sp.reshape(len(xs), p, p)


def fourier_s(phi, l, eta, a_trunc, N, M=0.0, d_xi=0.1, fourier_tol=1e-4,
              max_doublings=6, tail_terms=5):
    """s and s' on N+1 uniform nodes of [0, l].

    ``phi`` maps an array of z (Im z < -M) to stacked p x p matrices.
    a_trunc is doubled until the s-nodes move by less than fourier_tol.
    s is shifted so that s(0) = 0; the removed value is kept as s0_defect.
    """
    if not eta < -2 * M:
        raise EtaViolation(f"eta = {eta} must lie below -2M = {-2 * M}")
    xs = np.linspace(0.0, l, N + 1)
    a = float(a_trunc)
    s, sp = _transform_once(phi, xs, eta, a, d_xi, tail_terms)
    # max_doublings = 0 trusts a_trunc as given (tabulated data cannot be extended)
    change = np.inf
    for _ in range(max_doublings):
        a *= 2
        s2, sp2 = _transform_once(phi, xs, eta, a, d_xi, tail_terms)
        change = np.max(np.abs(s2 - s))
        s, sp = s2, sp2
        if change < fourier_tol:
            break
    if max_doublings and not change < fourier_tol:
        raise TailTooFat(f"s still moves by {change:.2e} at a = {a:g}")
    s0 = s[0].copy()
    return TransformKernel(float(l), xs, s - s0, sp, float(eta), a, float(np.max(np.abs(s0))))


def kernel_matrix(kernel):
    """K(x_i, x_j) = int_0^{min} s'(k + |x_i - x_j|) s'(k)^* dk as an (N+1)p square matrix.

    This is the double integral of the structured operator after the
    substitution lambda -> 2k + |x - r|; trapezoid in k.
    """
    sp = kernel.s_prime_values
    N, p, h = kernel.N, kernel.p, kernel.h
    K = np.zeros((N + 1, N + 1, p, p), complex)
    spH = np.conj(np.swapaxes(sp, -1, -2))
    for d in range(N + 1):
        prod = sp[d:] @ spH[:N + 1 - d]
        cum = np.zeros_like(prod)
        if len(prod) > 1:
            cum[1:] = np.cumsum(0.5 * h * (prod[1:] + prod[:-1]), axis=0)
        idx = np.arange(N + 1 - d)
        K[idx + d, idx] = cum
        if d:
            K[idx, idx + d] = np.conj(np.swapaxes(cum, -1, -2))
    return K.transpose(0, 2, 1, 3).reshape((N + 1) * p, (N + 1) * p)


def _weights(L, h):
    w = np.full(L + 1, h)
    w[0] = w[-1] = 0.5 * h
    if L == 0:
        w[:] = 0.0
    return w


@dataclass(frozen=True)
class StructuredOperator:
    """S_l on the nodes x_0..x_L in the symmetric form I + D^{1/2} K D^{1/2}.

    D holds the trapezoid weights, so this matrix is Hermitian and has the
    spectrum of the Nystrom operator f -> f + K D f.
    """

    l: float
    grid: np.ndarray
    matrix: np.ndarray
    sqrt_weights: np.ndarray

    def hermitian_defect(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])


def build_Sl(kernel, L=None, K=None, min_eig_floor=0.99):
    """Structured operator for l = grid[L] (the full grid by default)."""
    L = kernel.N if L is None else int(L)
    p = kernel.p
    K = kernel_matrix(kernel) if K is None else K
    n = (L + 1) * p
    sw = np.repeat(np.sqrt(_weights(L, kernel.h)), p)
    H = np.eye(n) + sw[:, None] * K[:n, :n] * sw[None, :]
    H = 0.5 * (H + H.conj().T)
    op = StructuredOperator(float(kernel.grid[L]), kernel.grid[:L + 1], H, sw)
    if op.min_eigenvalue() < min_eig_floor:
        raise GridTooCoarse(f"min eigenvalue {op.min_eigenvalue():.4f} at l = {op.l:g}")
    return op


def build_Sl_family(kernel, min_eig_floor=0.99):
    """Generator of S_l for every grid node l > 0, sharing one kernel matrix."""
    K = kernel_matrix(kernel)
    for L in range(1, kernel.N + 1):
        yield build_Sl(kernel, L, K, min_eig_floor)


@dataclass
class BlockRows:
    grid: np.ndarray
    omega1: np.ndarray = None
    omega2: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def orthonormality_defects(self):
        p = self.omega2.shape[-2]
        eye = np.eye(p)
        out = {"w2w2": float(np.max(np.abs(self.omega2 @ _ah(self.omega2) - eye)))}
        if self.omega1 is not None:
            out["w1w1"] = float(np.max(np.abs(self.omega1 @ _ah(self.omega1) - eye)))
            out["w1w2"] = float(np.max(np.abs(self.omega1 @ _ah(self.omega2))))
        return out


def _ah(a):
    return np.conj(np.swapaxes(a, -1, -2))


def recover_omega2(kernel, solve_tol=1e-8, min_eig_floor=0.99):
    """omega_2(l) = [0 I] - int_0^l (S_l^{-1} s')^* [I s] dx at every grid node.

    With g = D^{1/2} y the weighted sum  sum_i w_i y_i^* [I s_i]  becomes
    sum_i sqrt(w_i) g_i^* [I s_i], and g solves H g = D^{1/2} s'.
    """
    p, N = kernel.p, kernel.N
    K = kernel_matrix(kernel)
    sp = kernel.s_prime_values.reshape((N + 1) * p, p)
    right = np.concatenate([np.broadcast_to(np.eye(p), kernel.s_values.shape),
                            kernel.s_values], axis=-1)
    base = np.hstack([np.zeros((p, p)), np.eye(p)]).astype(complex)
    omega2 = np.empty((N + 1, p, 2 * p), complex)
    omega2[0] = base
    min_eigs = np.ones(N + 1)
    for L in range(1, N + 1):
        op = build_Sl(kernel, L, K, min_eig_floor=-np.inf)
        ev = np.linalg.eigvalsh(op.matrix)[0]
        min_eigs[L] = ev
        if ev < min_eig_floor:
            raise GridTooCoarse(f"min eigenvalue {ev:.4f} at l = {op.l:g}")
        n = (L + 1) * p
        rhs = op.sqrt_weights[:, None] * sp[:n]
        g = sla.cho_solve(sla.cho_factor(op.matrix), rhs)
        resid = np.linalg.norm(op.matrix @ g - rhs) / max(1.0, np.linalg.norm(rhs))
        if resid > solve_tol:
            raise SolveFailure(f"solve residual {resid:.2e} at l = {op.l:g}")
        gw = (op.sqrt_weights[:, None] * g).reshape(L + 1, p, p)
        omega2[L] = base - np.einsum("kba,kbc->ac", gw.conj(), right[:L + 1])
    return BlockRows(kernel.grid, omega2=omega2, diagnostics={"min_eig": min_eigs})


def _polar_rows(B):
    U, _, Vh = np.linalg.svd(B, full_matrices=False)
    return U @ Vh


def recover_omega1(rows, overlap_floor=0.5):
    """Complement omega_1 of omega_2 with omega_1' omega_1^* = 0 and omega_1(0) = [I 0].

    A complement is carried from node to node by projecting the previous one
    onto the new orthogonal complement of omega_2 and taking the polar factor;
    the left unitary u with u' = -u hat' hat^* then removes the remaining drift
    (midpoint Magnus step).
    """
    w2 = rows.omega2
    n, p, m = w2.shape
    grid = rows.grid
    e1 = np.hstack([np.eye(p), np.zeros((p, p))]).astype(complex)
    hats = np.empty_like(w2)
    P0 = np.eye(m) - _ah(w2[0]) @ w2[0]
    hats[0] = _polar_rows(e1 @ P0)
    for i in range(1, n):
        P = np.eye(m) - _ah(w2[i]) @ w2[i]
        B = hats[i - 1] @ P
        smin = np.linalg.svd(B, compute_uv=False).min()
        if smin < overlap_floor:
            raise PhaseJump(f"complement overlap {smin:.3f} at x = {grid[i]:g}")
        hats[i] = _polar_rows(B)
    u = e1 @ _ah(hats[0])
    u = _polar_rows(u)
    omega1 = np.empty_like(w2)
    omega1[0] = u @ hats[0]
    for i in range(n - 1):
        h = grid[i + 1] - grid[i]
        d = (hats[i + 1] - hats[i]) / h
        mid = 0.5 * (hats[i + 1] + hats[i])
        Om = d @ _ah(mid)
        Om = 0.5 * (Om - _ah(Om))
        u = u @ sla.expm(-h * Om)
        omega1[i + 1] = u @ hats[i + 1]
    return BlockRows(grid, omega1=omega1, omega2=w2, diagnostics=dict(rows.diagnostics))


def derivative_4th(values, h):
    """4th-order finite-difference derivative along axis 0 (one-sided at the ends)."""
    f = np.asarray(values)
    n = len(f)
    if n < 5:
        return np.gradient(f, h, axis=0)
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def recover_v(rows, h=None):
    """v = omega_1' omega_2^* on the grid."""
    h = rows.grid[1] - rows.grid[0] if h is None else h
    return derivative_4th(rows.omega1, h) @ _ah(rows.omega2)


@dataclass
class InversionResult:
    grid: np.ndarray
    v: np.ndarray
    kernel: TransformKernel
    rows: BlockRows


def recover_potential(phi, l, N, M=0.0, eta=None, a_trunc=40.0, d_xi=0.1, fourier_tol=1e-4,
                      min_eig_floor=0.99):
    """Full pipeline from a Weyl function to v on N+1 nodes of [0, l]."""
    eta = -2 * M - 1 if eta is None else eta
    kernel = fourier_s(phi, l, eta, a_trunc, N, M=M, d_xi=d_xi, fourier_tol=fourier_tol)
    rows = recover_omega1(recover_omega2(kernel, min_eig_floor=min_eig_floor))
    return InversionResult(kernel.grid, recover_v(rows), kernel, rows)


__all__ = [
    "TransformKernel", "StructuredOperator", "BlockRows", "InversionResult", "fourier_s",
    "kernel_matrix", "build_Sl", "build_Sl_family", "recover_omega2", "recover_omega1",
    "recover_v", "recover_potential", "derivative_4th",
]
