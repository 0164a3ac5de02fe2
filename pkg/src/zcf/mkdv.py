"""Focusing matrix mKdV: zero-curvature pair, j-structure checks, Weyl functions.

Conventions: j = diag(I_p, -I_p), V = [[0, v], [-v^*, 0]],
G = izj + V and
F = -iz^3 j - z^2 V - (iz/2)(V^2 + V_x j) + (1/4)(V_xx - 2V^3 - V_x V + V V_x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NoConvergence, SectorError, SingularDenominator
from .pencil import Domain2D, SpectralPencil, evaluate_provider
from .propagator import integrate_t, integrate_x


def signature(p):
    return np.diag(np.r_[np.ones(p), -np.ones(p)]).astype(complex)


def block_potential(v):
    """V = [[0, v], [-v^*, 0]] for a stack of p x p matrices v."""
    v = np.asarray(v, dtype=complex)
    p = v.shape[-1]
    out = np.zeros(v.shape[:-2] + (2 * p, 2 * p), dtype=complex)
    out[..., :p, p:] = v
    out[..., p:, :p] = -np.conj(np.swapaxes(v, -1, -2))
    return out


def _fd_provider(f, axis, order, h):
    """Central-difference derivative provider (4th order in h)."""
    if order == 1:
        offs, wts = np.array([-2, -1, 1, 2]), np.array([1, -8, 8, -1]) / 12.0
    elif order == 2:
        offs, wts = np.array([-2, -1, 0, 1, 2]), np.array([-1, 16, -30, 16, -1]) / 12.0
    else:
        offs, wts = np.array([-3, -2, -1, 1, 2, 3]), np.array([1, -8, 13, -13, 8, -1]) / 8.0

    def d(x, t):
        acc = 0
        for o, w in zip(offs, wts):
            if axis == "x":
                acc = acc + w * np.asarray(f(x + o * h, t), dtype=complex)
            else:
                acc = acc + w * np.asarray(f(x, t + o * h), dtype=complex)
        return acc / h ** order
    return d


@dataclass(frozen=True)
class MkdvPotential:
    """A p x p potential v(x, t) with its x-derivatives.

    Missing derivative providers fall back to finite differences of ``v``.
    ``v_xxx`` and ``v_t`` are optional extras; when present the built pencils
    carry analytic derivatives.
    """

    p: int
    v: Callable
    v_x: Optional[Callable] = None
    v_xx: Optional[Callable] = None
    M: float = 0.0
    sup_deriv_bound: float = np.inf
    domain: Domain2D = field(default_factory=lambda: Domain2D(np.inf, 1.0))
    v_xxx: Optional[Callable] = None
    v_t: Optional[Callable] = None
    fd_step: float = 1e-3

    def __post_init__(self):
        h = self.fd_step
        if self.v_x is None:
            object.__setattr__(self, "v_x", _fd_provider(self.v, "x", 1, h))
        if self.v_xx is None:
            object.__setattr__(self, "v_xx", _fd_provider(self.v, "x", 2, h))

    def values(self, x, t):
        return evaluate_provider(self.v, x, t, self.p)

    def sampled_bounds(self):
        """(sup ||v||, sup ||v_x|| + ||v_xx||) over the domain's sampling grid."""
        xs, ts = np.meshgrid(self.domain.x_grid(), self.domain.t_grid(), indexing="ij")
        nv = np.linalg.norm(evaluate_provider(self.v, xs, ts, self.p), 2, axis=(-2, -1))
        nd = (np.linalg.norm(evaluate_provider(self.v_x, xs, ts, self.p), 2, axis=(-2, -1))
              + np.linalg.norm(evaluate_provider(self.v_xx, xs, ts, self.p), 2, axis=(-2, -1)))
        return float(nv.max()), float(nd.max())

    def validate(self, slack=1e-9):
        sup_v, sup_d = self.sampled_bounds()
        if sup_v > self.M * (1 + slack) + slack:
            raise ValueError(f"sampled sup ||v|| = {sup_v:.6g} exceeds M = {self.M:.6g}")
        if sup_d > self.sup_deriv_bound * (1 + slack) + slack:
            raise ValueError("sampled derivative bound exceeded")
        return self


def zero_potential(p=1, T=1.0):
    zero = lambda x, t: np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape + (p, p), complex)
    return MkdvPotential(p, zero, zero, zero, M=0.0, sup_deriv_bound=0.0,
                         domain=Domain2D(np.inf, T), v_xxx=zero, v_t=zero)


def constant_potential(c, T=1.0):
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    p = c.shape[0]

    def v(x, t):
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        return np.broadcast_to(c, shape + (p, p)).copy()
    zero = lambda x, t: np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape + (p, p), complex)
    return MkdvPotential(p, v, zero, zero, M=float(np.linalg.norm(c, 2)), sup_deriv_bound=0.0,
                         domain=Domain2D(np.inf, T), v_xxx=zero, v_t=zero)


def build_mkdv_pair(pot):
    """(G, F) pencils of the mKdV zero-curvature representation."""
    p = pot.p
    m = 2 * p
    j = signature(p)

    def parts(x, t):
        V = block_potential(evaluate_provider(pot.v, x, t, p))
        Vx = block_potential(evaluate_provider(pot.v_x, x, t, p))
        Vxx = block_potential(evaluate_provider(pot.v_xx, x, t, p))
        return V, Vx, Vxx

    def g_coeffs(x, t):
        V = block_potential(evaluate_provider(pot.v, x, t, p))
        q1 = np.broadcast_to(-1j * j, V.shape)
        return np.stack([-V, q1], axis=-3), ()

    def f_from(V, Vx, Vxx):
        Q3 = np.broadcast_to(1j * j, V.shape)
        Q2 = V
        Q1 = 0.5j * (V @ V + Vx) @ j
        Q0 = -0.25 * (Vxx - 2 * V @ V @ V - Vx @ V + V @ Vx)
        return np.stack([Q0, Q1, Q2, Q3], axis=-3)

    def f_coeffs(x, t):
        return f_from(*parts(x, t)), ()

    g_dt = f_dx = None
    if pot.v_t is not None:
        def g_dt(x, t):
            Vt = block_potential(evaluate_provider(pot.v_t, x, t, p))
            return np.stack([-Vt, np.zeros_like(Vt)], axis=-3), ()
    if pot.v_xxx is not None:
        def f_dx(x, t):
            V, Vx, Vxx = parts(x, t)
            Vxxx = block_potential(evaluate_provider(pot.v_xxx, x, t, p))
            dQ1 = 0.5j * (Vx @ V + V @ Vx + Vxx) @ j
            dV3 = Vx @ V @ V + V @ Vx @ V + V @ V @ Vx
            dQ0 = -0.25 * (Vxxx - 2 * dV3 - Vxx @ V + V @ Vxx)
            return np.stack([dQ0, dQ1, Vx, np.zeros_like(V)], axis=-3), ()

    G = SpectralPencil(m=m, r=1, coefficients=g_coeffs, t_derivative=g_dt, domain=pot.domain)
    F = SpectralPencil(m=m, r=3, coefficients=f_coeffs, x_derivative=f_dx, domain=pot.domain)
    return G, F


def mkdv_residual(pot, x, t, h=1e-3):
    """|| 4 v_t - v_xxx - 3 (v_x v^* v + v v^* v_x) || at an interior point.

    v_t is a central difference of v; v_xxx comes from the analytic provider
    if present, otherwise a central difference of v_xx.
    """
    if x - 2 * h < 0 or t - h < 0:
        raise DomainError("stencil leaves the domain")
    if not pot.domain.contains(x + 2 * h, t + h):
        raise DomainError("stencil leaves the domain")
    p = pot.p
    ev = lambda f, a, b: evaluate_provider(f, a, b, p)
    v = ev(pot.v, x, t)
    vx = ev(pot.v_x, x, t)
    v_t = (ev(pot.v, x, t + h) - ev(pot.v, x, t - h)) / (2 * h)
    if pot.v_xxx is not None:
        vxxx = ev(pot.v_xxx, x, t)
    else:
        vxxx = (ev(pot.v_xx, x + h, t) - ev(pot.v_xx, x - h, t)) / (2 * h)
    vs = v.conj().T
    res = 4 * v_t - vxxx - 3 * (vx @ vs @ v + v @ vs @ vx)
    return float(np.linalg.norm(res, 2))


# ---------------------------------------------------------------- j-structure

def check_R_conjugate_inverse(pot, x, t, z, steps=2000):
    """|| R(x,t,conj z)^* R(x,t,z) - I ||; zero for exact arithmetic."""
    _, F = build_mkdv_pair(pot)
    r = integrate_t(F, x, z, t, steps).final
    rc = integrate_t(F, x, np.conj(z), t, steps).final
    return float(np.linalg.norm(rc.conj().T @ r - np.eye(2 * pot.p), 2))


def check_W_j_expansive(pot, x, t, z, steps=2000):
    """Smallest eigenvalue of W^* j W - j (non-negative for Im z < -M)."""
    if not z.imag < -pot.M:
        raise SectorError(f"Im z = {z.imag} is not below -M = {-pot.M}")
    G, _ = build_mkdv_pair(pot)
    w = integrate_x(G, t, z, x, steps).final
    j = signature(pot.p)
    h = w.conj().T @ j @ w - j
    return float(np.linalg.eigvalsh(0.5 * (h + h.conj().T)).min())


def in_contractive_sector(z, M1):
    return z.imag < -M1 and -np.pi / 4 < np.angle(z) < 0


def check_R_j_contractive(pot, x, t, z, steps=2000, M1=None):
    """Largest eigenvalue of R^* j R - j (non-positive inside the sector).

    The sector is Im z < -M1, -pi/4 < arg z < 0, with M1 = M + 1 by default.
    """
    M1 = pot.M + 1.0 if M1 is None else M1
    if not in_contractive_sector(complex(z), M1):
        raise SectorError(f"z = {z} lies outside the sector for M1 = {M1}")
    _, F = build_mkdv_pair(pot)
    r = integrate_t(F, x, z, t, steps).final
    j = signature(pot.p)
    h = r.conj().T @ j @ r - j
    return float(np.linalg.eigvalsh(0.5 * (h + h.conj().T)).max())


def F_antisymmetry(pot, x, t, z):
    """|| F(x,t,conj z)^* + F(x,t,z) ||."""
    _, F = build_mkdv_pair(pot)
    a = F(x, t, z)
    b = F(x, t, np.conj(z))
    return float(np.linalg.norm(b.conj().T + a, 2))


# ------------------------------------------------------------ Weyl functions

@dataclass(frozen=True)
class PropertyJPair:
    """Pair (P1, P2) of p x p matrix functions of z with property-j."""

    P1: Callable
    P2: Callable

    def stacked(self, z):
        return np.vstack([np.asarray(self.P1(z), complex), np.asarray(self.P2(z), complex)])

    def check(self, z, tol=1e-12):
        P = self.stacked(z)
        p = P.shape[1]
        gram = P.conj().T @ P
        jform = P.conj().T @ signature(p) @ P
        return (np.linalg.eigvalsh(gram).min() > tol
                and np.linalg.eigvalsh(0.5 * (jform + jform.conj().T)).max() <= tol)


def default_pair(p):
    return PropertyJPair(lambda z: np.zeros((p, p)), lambda z: np.eye(p))


@dataclass
class WeylFunction:
    """Sampled p x p Weyl function on the half-plane Im z < -M."""

    half_plane_margin: float
    samples: dict = field(default_factory=dict)
    provenance: str = "direct"

    def add(self, z, phi):
        z = complex(z)
        if not z.imag < -self.half_plane_margin:
            raise SectorError(f"Im z = {z.imag} not below -M")
        if z in self.samples:
            raise ValueError("samples are write-once")
        self.samples[z] = np.asarray(phi, dtype=complex)

    def __call__(self, z):
        return self.samples[complex(z)]

    def jform_defect(self):
        """Largest eigenvalue of [phi^* I] j [phi; I] over the samples (should be <= 0)."""
        worst = -np.inf
        for phi in self.samples.values():
            p = phi.shape[0]
            col = np.vstack([phi, np.eye(p)])
            h = col.conj().T @ signature(p) @ col
            worst = max(worst, np.linalg.eigvalsh(0.5 * (h + h.conj().T)).max())
        return worst


def mobius(A, P1, P2):
    """(A11 P1 + A12 P2)(A21 P1 + A22 P2)^{-1} for a 2x2-block matrix A."""
    p = P1.shape[0]
    num = A[:p, :p] @ P1 + A[:p, p:] @ P2
    den = A[p:, :p] @ P1 + A[p:, p:] @ P2
    if np.linalg.cond(den) > 1e13:
        raise SingularDenominator("Moebius denominator is numerically singular")
    return np.linalg.solve(den.T, num.T).T


@dataclass
class WeylReport:
    r_values: list
    iterates: list
    differences: list
    converged: bool


def weyl_direct(pot, t, z, pair=None, r_schedule=None, steps_per_unit=200, weyl_tol=1e-6):
    """Weyl function at (t, z) as the r -> infinity limit of Moebius images.

    A(r, z) = W(r, conj z)^* is advanced piecewise along the schedule, so the
    integration stops as soon as two successive iterates agree to weyl_tol
    (max-entry norm).  Returns (phi, WeylReport).
    """
    z = complex(z)
    if not z.imag < -pot.M:
        raise SectorError(f"Im z = {z.imag} is not below -M = {-pot.M}")
    p = pot.p
    pair = default_pair(p) if pair is None else pair
    if not pair.check(z):
        raise ValueError("pair does not have property-j at z")
    P1 = np.asarray(pair.P1(z), complex)
    P2 = np.asarray(pair.P2(z), complex)
    r_schedule = [2.0 * 2 ** k for k in range(6)] if r_schedule is None else list(r_schedule)
    G, _ = build_mkdv_pair(pot)
    W = np.eye(2 * p, dtype=complex)
    r_prev = 0.0
    iterates, diffs, rs = [], [], []
    for r in r_schedule:
        steps = max(1, int(np.ceil((r - r_prev) * steps_per_unit)))
        W = integrate_x(G, t, np.conj(z), r, steps, x_start=r_prev, base=W).final
        r_prev = r
        phi = mobius(W.conj().T, P1, P2)
        if iterates:
            diffs.append(float(np.max(np.abs(phi - iterates[-1]))))
        iterates.append(phi)
        rs.append(r)
        if diffs and diffs[-1] < weyl_tol:
            return phi, WeylReport(rs, iterates, diffs, True)
    raise NoConvergence(f"Weyl iterates did not settle below {weyl_tol:g}: {diffs}")


def boundary_R(pot, t, z, steps=2000):
    """R(t, z) = R(0, t, z) from the boundary data of v at x = 0."""
    _, F = build_mkdv_pair(pot)
    return integrate_t(F, 0.0, z, t, steps).final


def weyl_evolve(phi0, pot, t, z, steps=2000):
    """phi(t, z) = (R11 phi0 + R12)(R21 phi0 + R22)^{-1} with R = R(0, t, z)."""
    z = complex(z)
    if not z.imag < -pot.M:
        raise SectorError(f"Im z = {z.imag} is not below -M = {-pot.M}")
    if isinstance(phi0, WeylFunction):
        phi0 = phi0(z)
    phi0 = np.asarray(phi0, dtype=complex)
    R = boundary_R(pot, t, z, steps)
    return mobius(R, phi0, np.eye(pot.p))


__all__ = [
    "MkdvPotential", "PropertyJPair", "WeylFunction", "WeylReport", "build_mkdv_pair",
    "mkdv_residual", "check_R_conjugate_inverse", "check_W_j_expansive",
    "check_R_j_contractive", "in_contractive_sector", "F_antisymmetry", "weyl_direct",
    "weyl_evolve", "boundary_R", "mobius", "signature", "block_potential",
    "zero_potential", "constant_potential", "default_pair",
]
