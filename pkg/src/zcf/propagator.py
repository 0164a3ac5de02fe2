"""Fundamental solutions of the x- and t-systems and the factorization check."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StepOverflow
from .pencil import eval_pencil, pencil_derivative

BLOWUP = 1e300


@dataclass(frozen=True)
class FundamentalSolution:
    """Grid samples of a matrix solution of Y' = A Y along one coordinate.

    ``direction`` is 'x' (W at frozen t) or 't' (R at frozen x).
    """

    direction: str
    fixed_coordinate: float
    z: complex
    coords: np.ndarray
    matrices: np.ndarray
    base_matrix: np.ndarray

    @property
    def final(self):
        return self.matrices[-1]

    def __len__(self):
        return len(self.coords)

    def at(self, coord, atol=1e-12):
        i = int(np.argmin(np.abs(self.coords - coord)))
        if abs(self.coords[i] - coord) > atol * max(1.0, abs(coord)):
            raise KeyError(f"{coord} is not a sample coordinate")
        return self.matrices[i]

    def min_abs_det(self):
        return float(np.min(np.abs(np.linalg.det(self.matrices))))


def rk4_step_matrices(nodes, h):
    """Classical RK4 propagators for a linear system Y' = A(s) Y.

    ``nodes`` holds A at the half-step grid s_0, s_0 + h/2, ..., s_N, shape
    (2N+1, m, m).  Returns the N one-step matrices P_k with Y_{k+1} = P_k Y_k.
    """
    a0, am, a1 = nodes[0:-1:2], nodes[1::2], nodes[2::2]
    eye = np.eye(nodes.shape[-1])
    k1 = a0
    k2 = am @ (eye + 0.5 * h * k1)
    k3 = am @ (eye + 0.5 * h * k2)
    k4 = a1 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def chain(steps, base):
    out = np.empty((len(steps) + 1,) + base.shape, dtype=complex)
    out[0] = base
    y = base
    with np.errstate(over="ignore", invalid="ignore"):
        for k, p in enumerate(steps):
            y = p @ y
            out[k + 1] = y
    bad = ~np.isfinite(out).all(axis=(-2, -1)) | (np.abs(out).max(axis=(-2, -1)) > BLOWUP)
    if bad.any():
        raise StepOverflow(f"solution exceeded {BLOWUP:g} after {int(np.argmax(bad))} steps")
    return out


def _integrate(pencil, direction, fixed, z, start, end, steps, base):
    if steps < 1:
        raise ValueError("steps must be positive")
    z = complex(z)
    pencil.check_z(z)
    m = pencil.m
    base = np.eye(m, dtype=complex) if base is None else np.asarray(base, dtype=complex)
    if end == start:
        return FundamentalSolution(direction, fixed, z, np.array([float(start)]),
                                   base[None].copy(), base)
    h = (end - start) / steps
    s = start + 0.5 * h * np.arange(2 * steps + 1)
    if direction == "x":
        nodes = eval_pencil(pencil, s, fixed, z)
    else:
        nodes = eval_pencil(pencil, fixed, s, z)
    mats = chain(rk4_step_matrices(nodes, h), base)
    return FundamentalSolution(direction, fixed, z, s[::2].copy(), mats, base)


def integrate_x(G, t, z, x_end, steps, x_start=0.0, base=None):
    """W(., t, z) on a uniform grid from x_start to x_end, W(x_start) = base (I by default)."""
    return _integrate(G, "x", float(t), z, float(x_start), float(x_end), int(steps), base)


def integrate_t(F, x, z, t_end, steps, t_start=0.0, base=None):
    """R(x, ., z) on a uniform grid from t_start to t_end, R(x, t_start) = base."""
    return _integrate(F, "t", float(x), z, float(t_start), float(t_end), int(steps), base)


def factorization_parts(G, F, x, t, z, steps):
    w_xt = integrate_x(G, t, z, x, steps).final
    w_x0 = integrate_x(G, 0.0, z, x, steps).final
    r_xt = integrate_t(F, x, z, t, steps).final
    r_0t = integrate_t(F, 0.0, z, t, steps).final
    return w_xt, w_x0, r_xt, r_0t


def factorization_residual(G, F, x, t, z, steps=2000):
    """|| W(x,t,z) R(t,z) - R(x,t,z) W(x,0,z) || in the spectral norm."""
    w_xt, w_x0, r_xt, r_0t = factorization_parts(G, F, x, t, z, steps)
    return float(np.linalg.norm(w_xt @ r_0t - r_xt @ w_x0, 2))


def wave_function(G, F, x, t, z, steps=2000):
    """w(x,t,z) = W(x,t,z) R(0,t,z); equals I at the origin."""
    w = integrate_x(G, t, z, x, steps).final
    r = integrate_t(F, 0.0, z, t, steps).final
    return w @ r


def _stencil(integrate, pencil, fixed, z, centre, h, steps, sub=4):
    """Solution at centre - h, centre, centre + h on one grid."""
    head = integrate(pencil, fixed, z, centre - h, steps).final
    seg = integrate(pencil, fixed, z, centre + h, 2 * sub, centre - h, head)
    return seg.matrices[[0, sub, 2 * sub]]


def mixed_derivative_residual(G, F, x, t, z, h, steps=400):
    """Discrete check of w_tx = w_xt for the wave function w = W R(0, t).

    One ordering differences w in t and then in x; the other differences
    the exact x-derivative G w in t.  Each stencil line shares a single
    integration grid, so RK4 error stays smooth across it and does not
    pollute the divided differences.
    """
    if not h > 0 or x - h < 0 or t - h < 0:
        raise DomainError("stencil leaves the domain")
    dom = G.domain
    if dom is not None and (x + h > dom.b1 or t + h > dom.b2):
        raise DomainError("stencil leaves the domain")
    R = _stencil(integrate_t, F, 0.0, z, t, h, steps)
    w = {}
    for k, tt in enumerate((t - h, t, t + h)):
        w[k] = _stencil(integrate_x, G, tt, z, x, h, steps) @ R[k]
    dtw = (w[2] - w[0]) / (2 * h)
    dxdt = (dtw[2] - dtw[0]) / (2 * h)
    gw = [eval_pencil(G, x, tt, z) @ w[k][1] for k, tt in ((0, t - h), (2, t + h))]
    dtdx = (gw[1] - gw[0]) / (2 * h)
    return float(np.linalg.norm(dxdt - dtdx, 2))


def liouville_check(sol, floor=1e-12):
    """True when every sample has |det| above ``floor``."""
    return sol.min_abs_det() > floor


__all__ = [
    "FundamentalSolution", "integrate_x", "integrate_t", "factorization_residual",
    "wave_function", "mixed_derivative_residual", "liouville_check",
    "rk4_step_matrices", "pencil_derivative",
]
