"""Matrix families rational in the spectral parameter.

A pencil is

    G(x, t, z) = -( sum_k z**k q_k(x, t) + sum_s sum_k (z - c_s)**(-k) q_sk(x, t) )

with the coefficient matrices supplied by a single function of ``(x, t)``.
Coefficient functions receive numpy arrays of points and return stacked
matrices, so integrators can evaluate a whole grid in one call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DerivativeUnavailable, DomainError, PoleHit

# Coefficient function: (x, t) -> (poly, poles) where poly has shape
# (..., r+1, m, m) and poles is a tuple with one (..., r_s, m, m) array per pole.
CoeffFn = Callable[[np.ndarray, np.ndarray], tuple]

_FD_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD_FORWARD = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


@dataclass(frozen=True)
class Domain2D:
    """Rectangle [0, b1] x [0, b2]; either side may be infinite."""

    b1: float
    b2: float
    nx: int = 21
    nt: int = 11
    sample_cap: float = 10.0

    def __post_init__(self):
        if not (self.b1 > 0 and self.b2 > 0):
            raise ValueError("domain extents must be positive")
        if self.nx < 2 or self.nt < 2:
            raise ValueError("sampling grids need at least two nodes")

    def contains(self, x, t, slack=1e-12):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return bool(np.all((x >= -slack) & (x <= self.b1 * (1 + slack) + slack)
                           & (t >= -slack) & (t <= self.b2 * (1 + slack) + slack)))

    def length(self, axis):
        b = self.b1 if axis == "x" else self.b2
        return b if np.isfinite(b) else 1.0

    def x_grid(self):
        return np.linspace(0.0, min(self.b1, self.sample_cap), self.nx)

    def t_grid(self):
        return np.linspace(0.0, min(self.b2, self.sample_cap), self.nt)


def evaluate_provider(provider, x, t, m):
    """Evaluate a matrix provider on broadcast arrays of points.

    Providers that only accept scalars, or that ignore their arguments and
    return a single matrix, are handled by a per-point fallback.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast(x, t).shape
    if shape == ():
        return np.asarray(provider(float(x), float(t)), dtype=complex).reshape(m, m)
    try:
        out = np.asarray(provider(x, t), dtype=complex)
        if out.shape == shape + (m, m):
            return out
    except (TypeError, ValueError):
        pass
    xb, tb = np.broadcast_arrays(x, t)
    flat = [np.asarray(provider(float(a), float(b)), dtype=complex).reshape(m, m)
            for a, b in zip(xb.ravel(), tb.ravel())]
    return np.array(flat).reshape(shape + (m, m))


def _stack(providers, x, t, m):
    return np.stack([evaluate_provider(q, x, t, m) for q in providers], axis=-3)


@dataclass(frozen=True)
class SpectralPencil:
    m: int
    r: int
    coefficients: CoeffFn
    poles: tuple = ()
    pole_orders: tuple = ()
    t_derivative: Optional[CoeffFn] = None
    x_derivative: Optional[CoeffFn] = None
    domain: Optional[Domain2D] = None
    h_fd: Optional[float] = None
    one_sided: bool = True

    def __post_init__(self):
        if len(self.poles) != len(self.pole_orders):
            raise ValueError("one order per pole required")
        if any(k < 1 for k in self.pole_orders):
            raise ValueError("pole orders must be positive")
        c = np.asarray(self.poles, dtype=complex)
        if len(c) > 1 and np.min(np.abs(c[:, None] - c[None, :]) + np.eye(len(c))) == 0:
            raise ValueError("poles must be pairwise distinct")

    @classmethod
    def from_providers(cls, m, poly_coeffs, poles=(), pole_coeffs=(),
                       t_derivative_providers=None, x_derivative_providers=None,
                       **kwargs):
        """Build a pencil from per-coefficient providers q_k and q_sk.

        Derivative providers, when given, mirror the structure
        ``(poly_list, [pole_list, ...])``.
        """
        poly_coeffs = tuple(poly_coeffs)
        pole_coeffs = tuple(tuple(pc) for pc in pole_coeffs)
        poles = tuple(complex(c) for c in poles)

        def make(poly, pole_lists):
            def fn(x, t):
                return (_stack(poly, x, t, m),
                        tuple(_stack(pl, x, t, m) for pl in pole_lists))
            return fn

        dt = dx = None
        if t_derivative_providers is not None:
            dt = make(t_derivative_providers[0], t_derivative_providers[1])
        if x_derivative_providers is not None:
            dx = make(x_derivative_providers[0], x_derivative_providers[1])
        return cls(m=m, r=len(poly_coeffs) - 1, coefficients=make(poly_coeffs, pole_coeffs),
                   poles=poles, pole_orders=tuple(len(pc) for pc in pole_coeffs),
                   t_derivative=dt, x_derivative=dx, **kwargs)

    @property
    def is_polynomial(self):
        return len(self.poles) == 0

    def pole_tolerance(self, c):
        return 1e-8 * max(1.0, abs(c))

    def check_z(self, z):
        for c in self.poles:
            if abs(z - c) < self.pole_tolerance(c):
                raise PoleHit(f"z={z} is within tolerance of pole {c}")

    def check_domain(self, x, t):
        if self.domain is not None and not self.domain.contains(x, t):
            raise DomainError("point outside the declared domain")

    def assemble(self, coeffs, z):
        """Combine coefficient stacks into -(sum z^k q_k + sum (z-c)^-k q_sk)."""
        poly, pole_stacks = coeffs
        powers = z ** np.arange(self.r + 1)
        out = np.einsum("k,...kij->...ij", powers, poly)
        for c, stack in zip(self.poles, pole_stacks):
            inv = (z - c) ** -np.arange(1, stack.shape[-3] + 1)
            out = out + np.einsum("k,...kij->...ij", inv, stack)
        return -out

    def __call__(self, x, t, z):
        return eval_pencil(self, x, t, z)

    def _fd_step(self, axis):
        if self.h_fd is not None:
            return self.h_fd
        return 1e-4 * (self.domain.length(axis) if self.domain is not None else 1.0)

    def coefficient_derivative(self, x, t, axis):
        """Derivative of every coefficient in ``axis`` ('x' or 't').

        Analytic providers take precedence; otherwise a 4th-order central
        difference with step h_fd, switching to a one-sided stencil at the
        domain boundary when allowed.
        """
        analytic = self.t_derivative if axis == "t" else self.x_derivative
        if analytic is not None:
            return analytic(x, t)
        h = self._fd_step(axis)
        offsets = np.arange(-2, 3) * h
        weights = _FD_CENTRAL
        if self.domain is not None:
            x0 = np.asarray(x, float)
            t0 = np.asarray(t, float)
            pos = x0 if axis == "x" else t0
            hi = self.domain.b1 if axis == "x" else self.domain.b2
            lo_ok = np.all(pos - 2 * h >= 0)
            hi_ok = np.all(pos + 2 * h <= hi)
            if not (lo_ok and hi_ok):
                if not self.one_sided or (not lo_ok and not hi_ok):
                    raise DerivativeUnavailable(f"{axis}-stencil leaves the domain")
                sign = 1.0 if not lo_ok else -1.0
                offsets = sign * np.arange(5) * h
                weights = sign * _FD_FORWARD
        acc = None
        for w, d in zip(weights, offsets):
            if w == 0:
                continue
            c = self.coefficients(x + d, t) if axis == "x" else self.coefficients(x, t + d)
            if acc is None:
                acc = [w * c[0], [w * p for p in c[1]]]
            else:
                acc[0] = acc[0] + w * c[0]
                acc[1] = [a + w * p for a, p in zip(acc[1], c[1])]
        return acc[0] / h, tuple(a / h for a in acc[1])


def eval_pencil(pencil, x, t, z):
    """Evaluate the pencil at (x, t, z); x and t may be arrays."""
    z = complex(z)
    pencil.check_z(z)
    pencil.check_domain(x, t)
    return pencil.assemble(pencil.coefficients(np.asarray(x, float), np.asarray(t, float)), z)


def pencil_derivative(pencil, x, t, z, axis):
    z = complex(z)
    pencil.check_z(z)
    pencil.check_domain(x, t)
    return pencil.assemble(pencil.coefficient_derivative(np.asarray(x, float),
                                                         np.asarray(t, float), axis), z)


def zero_curvature_matrix(G, F, x, t, z):
    """G_t - F_x + [G, F] at one point."""
    if G.m != F.m:
        raise ValueError("pencils must share the matrix dimension")
    g = eval_pencil(G, x, t, z)
    f = eval_pencil(F, x, t, z)
    g_t = pencil_derivative(G, x, t, z, "t")
    f_x = pencil_derivative(F, x, t, z, "x")
    return g_t - f_x + g @ f - f @ g


def zero_curvature_residual(G, F, x, t, z):
    """Spectral norm of G_t - F_x + [G, F] at one point."""
    return float(np.linalg.norm(zero_curvature_matrix(G, F, x, t, z), 2))


def constant_pencil(matrices: Sequence, poles=(), pole_matrices=(), **kwargs):
    """Pencil with (x, t)-independent coefficients; handy for tests."""
    mats = [np.asarray(a, dtype=complex) for a in matrices]
    m = mats[0].shape[0]
    poly = np.array(mats)
    pole_stacks = tuple(np.array([np.asarray(a, dtype=complex) for a in pl]) for pl in pole_matrices)

    def coeffs(x, t):
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        return (np.broadcast_to(poly, shape + poly.shape),
                tuple(np.broadcast_to(p, shape + p.shape) for p in pole_stacks))

    def zeros(x, t):
        shape = np.broadcast(np.asarray(x), np.asarray(t)).shape
        return (np.zeros(shape + poly.shape, complex),
                tuple(np.zeros(shape + p.shape, complex) for p in pole_stacks))

    return SpectralPencil(m=m, r=len(mats) - 1, coefficients=coeffs,
                          poles=tuple(complex(c) for c in poles),
                          pole_orders=tuple(len(p) for p in pole_stacks),
                          t_derivative=zeros, x_derivative=zeros, **kwargs)
