"""Jost solutions and the scattering matrix of finitely supported perturbations.

For a perturbation supported on ``[lo, hi]`` the plus solution is ``t**n``
for ``n >= hi`` and the recurrence

    p_n e(n-1) + q_n e(n) + p_{n+1} e(n+1) = z(t) e(n)

is run downward.  Below the support ``e(n) = A t**n + B t**(-n-1)`` holds
exactly, and ``s = 1/A``, ``s_minus = B/A``.  The minus solution is the plus
solution of the reflected matrix, which yields ``s_plus``.

All Laurent arithmetic uses ``Fraction`` coefficients (the float inputs are
converted exactly), so recurrence residuals vanish identically.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circle_fn import BoundStateError, CircleFunction, cancel_boundary_factors, exact, rational_series
from .jacobi import JacobiMatrix
from .smatrix import ScatteringMatrix, validate

__all__ = [
    "JostSolution",
    "ScatteringData",
    "InconsistentDirectionsError",
    "jost_propagate",
    "recurrence_residual",
    "scattering_data",
    "extract_smatrix",
]

DIRECTION_TOL = 1e-12
_Z = exact([1, 0, 1], lo=-1)


class InconsistentDirectionsError(RuntimeError):
    """Plus and minus Jost runs disagree on the transmission coefficient."""


@dataclass(frozen=True)
class JostSolution:
    """Exact values ``e(n, t)`` for ``n`` in ``[lo, hi]``."""

    direction: str
    values: dict
    J: JacobiMatrix

    @property
    def lo(self) -> int:
        return min(self.values)

    @property
    def hi(self) -> int:
        return max(self.values)

    def __getitem__(self, n: int) -> CircleFunction:
        return self.values[n]


def _exact_coeffs(J: JacobiMatrix):
    return (lambda n: Fraction(J.p(n))), (lambda n: Fraction(J.q(n)))


def _plus_solution(J: JacobiMatrix, below: int = 3) -> dict:
    sup = J.support() or (0, 0)
    lo, hi = sup
    p, q = _exact_coeffs(J)
    e = {hi + 1: exact([1], hi + 1), hi: exact([1], hi)}
    for n in range(hi, lo - below, -1):
        e[n - 1] = (_Z * e[n] - e[n] * q(n) - e[n + 1] * p(n + 1)) / p(n)
    return e


def jost_propagate(J: JacobiMatrix, direction: str = "plus") -> JostSolution:
    """Exact Jost solution ``e^+(n, t)`` or ``e^-(n, t)``.

    ``e^-`` obeys ``p_n e^-(-n) + q_n e^-(-n-1) + p_{n+1} e^-(-n-2) = z e^-(-n-1)``,
    which is the plus recurrence of the reflected matrix.
    """
    if J.truncated:
        J = J.untruncated()
    if direction == "plus":
        return JostSolution("plus", _plus_solution(J), J)
    if direction == "minus":
        return JostSolution("minus", _plus_solution(J.reflect()), J)
    raise ValueError(f"direction must be 'plus' or 'minus', got {direction!r}")


def recurrence_residual(J: JacobiMatrix, sol: JostSolution, n: int) -> CircleFunction:
    """Residual of the three-term recurrence at an interior index (exact)."""
    K = J.reflect() if sol.direction == "minus" else J
    p, q = _exact_coeffs(K)
    e = sol.values
    return e[n - 1] * p(n) + e[n] * q(n) + e[n + 1] * p(n + 1) - _Z * e[n]


def _amplitudes(sol: JostSolution) -> tuple[CircleFunction, CircleFunction]:
    """Numerators of ``A`` and ``B`` over ``D = 1 - t**-2``."""
    n = sol.lo + 1
    e_n, e_m = sol[n], sol[n - 1]
    num_a = e_n.shift(-n) - e_m.shift(-n - 1)
    num_b = e_m.shift(n) - e_n.shift(n - 1)
    return num_a, num_b


@dataclass(frozen=True)
class ScatteringData:
    """Scattering matrix plus the exact rational data it was built from."""

    S: ScatteringMatrix
    num_a_plus: CircleFunction
    num_b_plus: CircleFunction
    num_a_minus: CircleFunction
    num_b_minus: CircleFunction
    direction_gap: float

    def provenance(self) -> dict:
        def frac(f: CircleFunction) -> dict:
            return {str(f.lo + i): str(c) for i, c in enumerate(f.coeffs)}

        return {
            "denominator_D": {"-2": "-1", "0": "1"},
            "plus": {"A_numerator": frac(self.num_a_plus), "B_numerator": frac(self.num_b_plus)},
            "minus": {"A_numerator": frac(self.num_a_minus), "B_numerator": frac(self.num_b_minus)},
            "note": "A = A_numerator / D, B = B_numerator / D; s = 1/A, reflection = B/A",
            "direction_gap": self.direction_gap,
        }


_D = exact([-1, 0, 1], lo=-2)


def _quotient(num: CircleFunction, den: CircleFunction) -> CircleFunction:
    num, den = cancel_boundary_factors(num.to_float(), den.to_float())
    try:
        return rational_series(num, den)
    except BoundStateError as exc:
        raise BoundStateError(f"bound state present: {exc}", exc.min_modulus) from exc


def scattering_data(J: JacobiMatrix) -> ScatteringData:
    """Scattering matrix of ``J`` with exact amplitude numerators.

    Raises
    ------
    BoundStateError
        If ``A`` vanishes on the closed disk.
    InconsistentDirectionsError
        If the two directions give different ``s`` beyond ``1e-12``.
    """
    if J.truncated:
        J = J.untruncated()
    plus = jost_propagate(J, "plus")
    minus = jost_propagate(J, "minus")
    a_p, b_p = _amplitudes(plus)
    a_m, b_m = _amplitudes(minus)
    s = _quotient(_D, a_p)
    s_from_minus = _quotient(_D, a_m)
    gap = _gap(s, s_from_minus)
    if gap > DIRECTION_TOL:
        raise InconsistentDirectionsError(f"transmission coefficients differ by {gap:.3g}")
    S = ScatteringMatrix(s, _quotient(b_p, a_p), _quotient(b_m, a_m))
    return ScatteringData(S, a_p, b_p, a_m, b_m, gap)


def _gap(f: CircleFunction, g: CircleFunction) -> float:
    lo, hi = min(f.lo, g.lo), max(f.hi, g.hi)
    return float(np.max(np.abs(f.dense(lo, hi) - g.dense(lo, hi)), initial=0.0))


def extract_smatrix(J: JacobiMatrix) -> ScatteringMatrix:
    """Scattering matrix ``(s, s_minus, s_plus)`` of a finitely supported ``J``."""
    return scattering_data(J).S


def check_extraction(J: JacobiMatrix, tol_unitary: float = 1e-12):
    """Extract and validate; returns ``(S, report)``."""
    S = extract_smatrix(J)
    return S, validate(S, tol_unitary=tol_unitary)
