"""Jacobi matrix reconstruction from a reflection coefficient.

With ``sigma_n = s_plus * t**(2n)`` and ``K_n`` the normalized kernel of the
weighted Hardy space for ``sigma_n``, the functions ``phi_n = t**n K_n``
form an orthonormal system in the ``s_plus`` metric, and multiplication by
``z(t) = t + 1/t`` acts on it as

    z phi_n = p_n phi_{n-1} + q_n phi_n + p_{n+1} phi_{n+1}.

The dual reconstruction runs the same procedure on ``s_minus``; its basis
element ``psi_n`` represents site ``-n-1``, so the coefficients are reflected
(``q_m = q'_{-m-1}``, ``p_m = p'_{-m}``).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circle_fn import CircleFunction, uniformizer
from .hankel import DEFAULT_EPS_SCHEDULE, DEFAULT_N, metric_apply, symbol_kernel
from .jacobi import JacobiMatrix

__all__ = [
    "ReconstructionResult",
    "ReconstructionError",
    "build_basis",
    "reconstruct_jacobi",
    "reconstruct_dual",
    "DEFAULT_M",
]

log = logging.getLogger(__name__)

DEFAULT_M = 24


class ReconstructionError(RuntimeError):
    pass


@dataclass
class ReconstructionResult:
    J: JacobiMatrix
    basis: dict
    kernels: dict
    orthonormality_defect: float
    band_defect: float
    flags: dict = field(default_factory=dict)
    side: str = "plus"

    def to_json(self) -> dict:
        out = self.J.to_json()
        out.update(
            {
                "side": self.side,
                "orthonormality_defect": self.orthonormality_defect,
                "band_defect": self.band_defect,
                "flags": {str(k): v for k, v in self.flags.items()},
                "kernel_K0": {str(n): kern.K0 for n, kern in sorted(self.kernels.items())},
            }
        )
        return out


def build_basis(
    s_plus: CircleFunction,
    M: int = DEFAULT_M,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    lo: int | None = None,
    hi: int | None = None,
) -> tuple[dict, dict, dict]:
    """``{n: phi_n}`` for ``n`` in ``[lo, hi]`` (default ``[-M, M]``).

    Returns the basis, the kernels and ``{n: reason}`` flags for kernels that
    needed regularization without converging.
    """
    lo = -M if lo is None else lo
    hi = M if hi is None else hi
    basis, kernels, flags = {}, {}, {}
    for n in range(lo, hi + 1):
        kern = symbol_kernel(s_plus.shift(2 * n), N, eps_schedule, cross_check=False)
        kernels[n] = kern
        basis[n] = kern.K.shift(n)
        if not kern.converged:
            flags[n] = f"kernel not converged (gap {kern.gap:.3g})"
    return basis, kernels, flags


def _stack(funcs: list[CircleFunction]) -> tuple[np.ndarray, int]:
    lo = min(f.lo for f in funcs if not f.is_zero)
    hi = max(f.hi for f in funcs if not f.is_zero)
    return np.vstack([f.dense(lo, hi) for f in funcs]), lo


def reconstruct_jacobi(
    s_plus: CircleFunction,
    M: int = DEFAULT_M,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> ReconstructionResult:
    """Coefficients ``p_n, q_n`` for ``n`` in ``[-M, M]`` from ``s_plus``.

    ``q_n = <z phi_n, phi_n>`` and ``p_{n+1} = <z phi_n, phi_{n+1}>`` in the
    ``s_plus`` metric; the defects measure the Gram matrix against the
    identity and the entries of the ``z`` matrix off the tridiagonal band.
    """
    basis, kernels, flags = build_basis(s_plus, M, N, eps_schedule, lo=-M - 1, hi=M)
    idx = list(range(-M - 1, M + 1))
    z = uniformizer()
    Phi, lo_phi = _stack([basis[n] for n in idx])
    Gphi, lo_g = _stack([metric_apply(basis[n], s_plus) for n in idx])
    Zphi, lo_z = _stack([z * basis[n] for n in idx])

    def pair(A, a_lo, B, b_lo):
        lo = max(a_lo, b_lo)
        hi = min(a_lo + A.shape[1], b_lo + B.shape[1]) - 1
        return A[:, lo - a_lo: hi - a_lo + 1] @ B[:, lo - b_lo: hi - b_lo + 1].T

    gram = pair(Phi, lo_phi, Gphi, lo_g)
    # X[i, j] = <z phi_i, phi_j>
    X = pair(Zphi, lo_z, Gphi, lo_g)

    core = slice(1, None)  # drop n = -M - 1, used only for p_{-M}
    orth = float(np.max(np.abs(gram[core, core] - np.eye(2 * M + 1))))
    Xc = X[core, core]
    off = np.abs(np.subtract.outer(np.arange(2 * M + 1), np.arange(2 * M + 1))) >= 2
    band = float(np.max(np.abs(Xc[off]), initial=0.0))

    q = np.array([X[i, i] for i in range(1, 2 * M + 2)])
    p = np.array([X[i - 1, i] for i in range(1, 2 * M + 2)])
    if np.any(p <= 0):
        bad = [idx[i] for i in range(1, 2 * M + 2) if X[i - 1, i] <= 0]
        raise ReconstructionError(f"non-positive p at sites {bad}")
    J = JacobiMatrix.from_arrays(-M, p, q, truncated=True)
    log.debug("reconstructed range [-%d, %d]: orth %.3g band %.3g", M, M, orth, band)
    return ReconstructionResult(J, {n: basis[n] for n in idx[1:]}, kernels, orth, band, flags)


def reconstruct_dual(
    s_minus: CircleFunction,
    M: int = DEFAULT_M,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> ReconstructionResult:
    """The matrix built from ``s_minus``, reflected onto the axis of ``J[s_plus]``.

    The ``s_minus`` basis element ``psi_n`` stands for site ``-n-1``.  This
    alignment reproduces the original matrix on three-site examples.
    """
    inner = reconstruct_jacobi(s_minus, M + 1, N, eps_schedule)
    J = inner.J.reflect().restricted(-M, M)
    return ReconstructionResult(
        J,
        inner.basis,
        inner.kernels,
        inner.orthonormality_defect,
        inner.band_defect,
        inner.flags,
        side="minus",
    )
