"""Scattering matrices ``S = [[s_minus, s], [s, s_plus]]`` on the unit circle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circle_fn import (
    DEFAULT_GRID,
    TOL_INNER,
    BoundStateError,
    CircleFunction,
    NotInnerError,
    inner_defect,
    outer_test,
    rational_series,
)

__all__ = [
    "ScatteringMatrix",
    "ValidationReport",
    "InvalidScatteringMatrix",
    "validate",
    "analytic_smatrix",
    "rank3_smatrix",
    "rank3_numerators",
    "repair",
    "TOL_UNITARY",
]

TOL_UNITARY = 1e-10
TOL_OUTER = 1e-3


class InvalidScatteringMatrix(ValueError):
    """Construction produced (or was handed) data violating the scattering-matrix contract."""

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ScatteringMatrix:
    s: CircleFunction
    s_minus: CircleFunction
    s_plus: CircleFunction

    @classmethod
    def free(cls) -> "ScatteringMatrix":
        return cls(CircleFunction.constant(1.0), CircleFunction.zero(), CircleFunction.zero())

    @classmethod
    def from_json(cls, data: dict) -> "ScatteringMatrix":
        return cls(
            CircleFunction.from_json(data["s"]),
            CircleFunction.from_json(data["s_minus"]),
            CircleFunction.from_json(data["s_plus"]),
        )

    def to_json(self) -> dict:
        return {"s": self.s.to_json(), "s_minus": self.s_minus.to_json(), "s_plus": self.s_plus.to_json()}

    def max_width(self) -> int:
        return max(self.s.width, self.s_minus.width, self.s_plus.width)


@dataclass(frozen=True)
class ValidationReport:
    unitarity_defect: float
    symmetry_defect: float
    outer_defect: float
    outer_inconclusive: bool
    tol_unitary: float
    tol_outer: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            self.unitarity_defect < self.tol_unitary
            and self.symmetry_defect == 0.0
            and not self.outer_inconclusive
            and self.outer_defect < self.tol_outer
        )

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "unitarity_defect": self.unitarity_defect,
            "symmetry_defect": self.symmetry_defect,
            "outer_defect": None if math.isinf(self.outer_defect) else self.outer_defect,
            "outer_inconclusive": self.outer_inconclusive,
            "tol_unitary": self.tol_unitary,
            "tol_outer": self.tol_outer,
            "checks": self.checks,
        }


def _grid_for(S: ScatteringMatrix, grid: int) -> int:
    size = grid
    while size < S.max_width():
        size *= 2
    return size


def validate(
    S: ScatteringMatrix,
    tol_unitary: float = TOL_UNITARY,
    tol_outer: float = TOL_OUTER,
    grid: int = DEFAULT_GRID,
) -> ValidationReport:
    """Check unitarity, symmetry and outerness of ``s`` on a grid."""
    size = _grid_for(S, grid)
    s = S.s.samples(size).values
    sm = S.s_minus.samples(size).values
    sp = S.s_plus.samples(size).values
    abs_s2 = np.abs(s) ** 2
    checks = {
        "|s|^2+|s_plus|^2-1": float(np.max(np.abs(abs_s2 + np.abs(sp) ** 2 - 1))),
        "|s|^2+|s_minus|^2-1": float(np.max(np.abs(abs_s2 + np.abs(sm) ** 2 - 1))),
        "s_minus*conj(s)+s*conj(s_plus)": float(np.max(np.abs(sm * np.conj(s) + s * np.conj(sp)))),
    }
    # real coefficient storage makes S*(conj t) = S(t) hold identically
    symmetry = max(
        float(np.max(np.abs(np.imag(np.asarray(f.coeffs, dtype=complex))), initial=0.0))
        for f in (S.s, S.s_minus, S.s_plus)
    )
    outer = outer_test(S.s, tol_outer, size)
    return ValidationReport(
        unitarity_defect=max(checks.values()),
        symmetry_defect=symmetry,
        outer_defect=outer.defect,
        outer_inconclusive=outer.inconclusive,
        tol_unitary=tol_unitary,
        tol_outer=tol_outer,
        checks=checks,
    )


def _require_inner(f: CircleFunction, name: str, tol: float = TOL_INNER) -> None:
    d = inner_defect(f)
    if d > tol:
        raise NotInnerError(f"{name} is not inner: max ||{name}|-1| = {d:.3g}", d)


def _require_valid(S: ScatteringMatrix, what: str, tol_unitary: float = TOL_UNITARY) -> ScatteringMatrix:
    report = validate(S, tol_unitary=tol_unitary)
    if not report.passed:
        raise InvalidScatteringMatrix(f"{what} fails validation: {report.to_json()}", report)
    return S


def analytic_smatrix(delta: CircleFunction) -> ScatteringMatrix:
    """``s = (1 - Delta)/2`` and ``s_minus = s_plus = (1 + Delta)/2`` for an inner ``Delta``."""
    _require_inner(delta, "Delta")
    S = ScatteringMatrix((1.0 - delta) / 2, (1.0 + delta) / 2, (1.0 + delta) / 2)
    return _require_valid(S, "analytic S")


def rank3_numerators(p0: float, q0: float, qm1: float) -> dict:
    """Numerator coefficients (ascending powers of ``t``) over ``phi``.

    ``phi = (1 - q0 t)(1 - qm1 t) - p0**2 t**2``.  The ``s_minus``/``s_plus``
    entries are those reproduced by Jost propagation of the three-site matrix:
    with ``psi = (1 - q0 t)(qm1 - t) + p0**2 t`` they are ``psi/phi`` and
    ``psi_*/phi`` where ``psi_*(t) = t**2 psi(1/t)``.

    ``printed_*`` keeps the variant ``psi = (1 - q0 t)(qm1 - t) + p0**2 t**2``
    with ``s_minus = psi_*/phi``, ``s_plus = psi/phi`` for comparison.  It is
    not unitary and gives ``s_plus = t**2 - t`` at the free point.
    """
    mid = p0**2 - q0 * qm1 - 1.0
    printed_psi = [qm1, -1.0 - q0 * qm1, p0**2 + q0]
    return {
        "phi": [1.0, -(q0 + qm1), q0 * qm1 - p0**2],
        "s": [p0, 0.0, -p0],
        "s_minus": [qm1, mid, q0],
        "s_plus": [q0, mid, qm1],
        "printed_s_minus": printed_psi[::-1],
        "printed_s_plus": printed_psi,
    }


def rank3_smatrix(p0: float, q0: float, qm1: float) -> ScatteringMatrix:
    """Scattering matrix of ``J_0`` with ``p_0, q_0, q_{-1}`` replaced.

    Raises
    ------
    BoundStateError
        When ``||[[qm1, p0], [p0, q0]]|| > 1`` or ``phi`` vanishes on the closed disk.
    """
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    norm = float(np.linalg.norm(np.array([[qm1, p0], [p0, q0]]), 2))
    if norm > 1.0 + 1e-12:
        raise BoundStateError(f"bound state present: ||[[q_-1, p0], [p0, q0]]|| = {norm:.6g} > 1", 1.0 / norm)
    c = rank3_numerators(p0, q0, qm1)
    phi = CircleFunction(np.array(c["phi"]))
    S = ScatteringMatrix(
        rational_series(CircleFunction(np.array(c["s"])), phi),
        rational_series(CircleFunction(np.array(c["s_minus"])), phi),
        rational_series(CircleFunction(np.array(c["s_plus"])), phi),
    )
    return _require_valid(S, "rank-3 S")


def repair(S: ScatteringMatrix, phi: CircleFunction, tol_unitary: float = 1e-8) -> ScatteringMatrix:
    """``S_Phi``: ``s_minus -> s_minus * Phi`` and ``s_plus -> s_plus * conj(Phi)``.

    ``conj(Phi)`` on the circle is ``Phi(1/t)``, i.e. the coefficient reversal.
    """
    _require_inner(phi, "Phi")
    out = ScatteringMatrix(S.s, (S.s_minus * phi).truncate(1e-17), (S.s_plus * phi.conj()).truncate(1e-17))
    return _require_valid(out, "repaired S", tol_unitary)
