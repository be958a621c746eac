"""Hankel operators, the weighted metric and regularized reproducing kernels.

For a symbol ``sigma`` the metric on ``L^2`` is

    ||f||^2 = < f(t) + conj(t) (sigma f)(conj t), f(t) >,

whose Gram operator restricted to ``H^2`` is ``I + H``, with the Hankel
matrix ``H[j, k] = sigma_hat(-(j + k + 1))``.  The reproducing vector for
evaluation at the origin solves ``(I + H) k = e_0``; when ``I + H`` is
singular it is taken as the limit of ``(eps + I + H)^{-1} e_0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh, hankel

from .circle_fn import CircleFunction

__all__ = [
    "HankelOperator",
    "ReproducingKernel",
    "KernelNotConverged",
    "hankel_from_symbol",
    "metric_apply",
    "weighted_inner_product",
    "reproducing_kernel",
    "symbol_kernel",
    "DEFAULT_EPS_SCHEDULE",
    "DEFAULT_N",
]

DEFAULT_N = 256
DEFAULT_EPS_SCHEDULE = tuple(10.0 ** -k for k in range(2, 11))
TOL_KERNEL = 1e-10
INVERTIBLE_EIG = 1e-8
PSD_TOL = 1e-10


class KernelNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class HankelOperator:
    """Truncated Hankel matrix of a symbol."""

    entries: np.ndarray
    symbol_window: tuple[int, int]

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    def active_size(self) -> int:
        """Size of the leading block outside of which ``H`` vanishes."""
        nz = np.flatnonzero(np.any(self.entries != 0.0, axis=0))
        return int(nz[-1] + 1) if nz.size else 0

    def to_csv(self) -> str:
        return "\n".join(",".join(repr(float(x)) for x in row) for row in self.entries) + "\n"


def hankel_from_symbol(sigma: CircleFunction, N: int) -> HankelOperator:
    """``H[j, k] = sigma_hat(-(j + k + 1))`` for ``0 <= j, k < N``."""
    if N < 1:
        raise ValueError("N must be positive")
    # anti-diagonal d = j + k carries sigma_hat(-(d + 1)), d = 0 .. 2N - 2
    diag = sigma.dense(-(2 * N - 1), -1)[::-1]
    return HankelOperator(hankel(diag[:N], diag[N - 1:]), sigma.window)


def metric_apply(f: CircleFunction, sigma: CircleFunction) -> CircleFunction:
    """``f + conj(t) (sigma f)(conj t)``, the Gram operator applied to ``f``."""
    return f + (sigma * f).involute().shift(-1)


def weighted_inner_product(f: CircleFunction, g: CircleFunction, sigma: CircleFunction) -> float:
    """Polarized metric ``< f + conj(t)(sigma f)(conj t), g >`` on real-coefficient functions."""
    Gf = metric_apply(f, sigma)
    if Gf.is_zero or g.is_zero:
        return 0.0
    lo, hi = max(Gf.lo, g.lo), min(Gf.hi, g.hi)
    if lo > hi:
        return 0.0
    return float(np.dot(Gf.dense(lo, hi), g.dense(lo, hi)))


@dataclass(frozen=True)
class ReproducingKernel:
    """``k`` with ``<f, k> = f(0)``, ``k0 = k(0)`` and ``K = k / sqrt(k0)``."""

    k: CircleFunction
    k0: float
    K: CircleFunction
    epsilon_trace: list = field(default_factory=list)
    converged: bool = True
    method: str = "direct"
    min_eigenvalue: float = 1.0
    gap: float = 0.0

    @property
    def K0(self) -> float:
        return math.sqrt(self.k0)

    def to_json(self) -> dict:
        return {
            "k0": self.k0,
            "K": self.K.to_json(),
            "epsilon_trace": [[e, v] for e, v in self.epsilon_trace],
            "converged": self.converged,
            "method": self.method,
            "min_eigenvalue": self.min_eigenvalue,
        }


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return cho_solve(cho_factor(A, lower=True, check_finite=False), b, check_finite=False)
    except LinAlgError:
        lam, V = eigh(A)
        lam = np.clip(lam, 0.0, None)
        inv = np.divide(1.0, lam, out=np.zeros_like(lam), where=lam > 0)
        return V @ (inv * (V.T @ b))


def reproducing_kernel(
    H: HankelOperator,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    tol_kernel: float = TOL_KERNEL,
    cross_check: bool = True,
) -> ReproducingKernel:
    """Reproducing vector ``(I + H)^[-1] e_0`` of the weighted Hardy space.

    Only the leading block where ``H`` is nonzero is factored; outside it
    ``I + H`` is the identity and the solution vanishes.  If the smallest
    eigenvalue exceeds ``1e-8`` the system is solved at ``eps = 0`` and the
    schedule is only traced; otherwise the schedule is iterated until
    successive solutions differ by less than ``tol_kernel`` in the
    ``(I + H)``-norm and in relative ``k(0)``.
    """
    n = max(H.active_size(), 1)
    G = np.eye(n) + H.entries[:n, :n]
    e0 = np.zeros(n)
    e0[0] = 1.0
    lam, V = eigh(G)
    lam_min = float(lam[0])
    if lam_min < -PSD_TOL:
        raise ValueError(f"I + H is not positive semidefinite (min eigenvalue {lam_min:.3g})")
    v0 = V[0, :]
    trace = []
    if cross_check:
        for eps in eps_schedule:
            trace.append((float(eps), float(np.sum(v0**2 / (lam + eps)))))

    converged, gap = True, 0.0
    if lam_min > INVERTIBLE_EIG:
        x = _solve_spd(G, e0)
        method = "direct"
    else:
        method = "regularized"
        x_prev = None
        converged = False
        for eps in eps_schedule:
            x = _solve_spd(G + eps * np.eye(n), e0)
            if x_prev is not None:
                d = x - x_prev
                # k(0) must settle too: along a null direction the G-norm gap is blind
                gap = max(math.sqrt(max(float(d @ G @ d), 0.0)), abs(d[0]) / max(1.0, abs(x[0])))
                if gap < tol_kernel:
                    converged = True
                    break
            x_prev = x
    k0 = float(x[0])
    if not k0 > 0:
        raise KernelNotConverged(f"k(0) = {k0} is not positive")
    k = CircleFunction(x, 0)
    return ReproducingKernel(
        k=k,
        k0=k0,
        K=k / math.sqrt(k0),
        epsilon_trace=trace,
        converged=converged,
        method=method,
        min_eigenvalue=lam_min,
        gap=gap,
    )


def required_order(sigma: CircleFunction, N: int = DEFAULT_N, margin: int = 16) -> int:
    """Truncation order covering every nonzero Hankel entry of ``sigma`` plus a margin."""
    depth = max(0, -sigma.lo) if not sigma.is_zero else 0
    return max(N, depth + margin) if depth > N else N


def symbol_kernel(
    sigma: CircleFunction,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    cross_check: bool = True,
) -> ReproducingKernel:
    """Kernel of the weighted space for ``sigma`` with ``N`` enlarged to the symbol depth."""
    return reproducing_kernel(hankel_from_symbol(sigma, required_order(sigma, N)), eps_schedule, cross_check=cross_check)
