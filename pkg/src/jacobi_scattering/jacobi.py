"""Two-sided Jacobi matrices as finite perturbations of the free matrix.

Convention: ``J e_n = p_n e_{n-1} + q_n e_n + p_{n+1} e_{n+1}``, so ``p_n``
couples sites ``n - 1`` and ``n``.  Outside the stored perturbation
``p_n = 1`` and ``q_n = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "JacobiMatrix",
    "CoefficientWindow",
    "DecayReport",
    "OutOfRangeError",
    "apply_window",
    "distance",
    "decay_check",
]


class OutOfRangeError(KeyError):
    """Coefficient requested outside the stored range of a truncated matrix."""


@dataclass(frozen=True)
class JacobiMatrix:
    """Jacobi matrix ``J_0 + perturbation``.

    ``perturbation`` maps ``n`` to ``(p_n, q_n)``.  Reconstructed matrices
    carry ``range=(lo, hi)`` and ``truncated=True``; their coefficients are
    only known on that range.
    """

    perturbation: Mapping[int, tuple[float, float]] = field(default_factory=dict)
    range: tuple[int, int] | None = None
    truncated: bool = False

    def __post_init__(self):
        pert = {int(n): (float(p), float(q)) for n, (p, q) in self.perturbation.items()}
        for n, (p, _) in pert.items():
            if not p > 0:
                raise ValueError(f"p_{n} = {p} is not positive")
        object.__setattr__(self, "perturbation", dict(sorted(pert.items())))
        if self.truncated and self.range is None:
            raise ValueError("a truncated matrix needs an explicit range")

    @classmethod
    def free(cls) -> "JacobiMatrix":
        return cls({})

    @classmethod
    def from_arrays(cls, lo: int, p, q, truncated: bool = True) -> "JacobiMatrix":
        p, q = np.asarray(p, float), np.asarray(q, float)
        pert = {lo + i: (p[i], q[i]) for i in range(p.size)}
        return cls(pert, (lo, lo + p.size - 1), truncated)

    @classmethod
    def rank3(cls, p0: float, q0: float, qm1: float) -> "JacobiMatrix":
        """Free matrix with ``p_0``, ``q_0`` and ``q_{-1}`` replaced."""
        return cls({0: (p0, q0), -1: (1.0, qm1)})

    def _check(self, n: int) -> None:
        if self.truncated and not (self.range[0] <= n <= self.range[1]):
            raise OutOfRangeError(f"index {n} outside the stored range {self.range}")

    def p(self, n: int) -> float:
        self._check(n)
        return self.perturbation.get(n, (1.0, 0.0))[0]

    def q(self, n: int) -> float:
        self._check(n)
        return self.perturbation.get(n, (1.0, 0.0))[1]

    def support(self) -> tuple[int, int] | None:
        """Smallest ``[lo, hi]`` holding every coefficient that differs from ``J_0``."""
        idx = [n for n, (p, q) in self.perturbation.items() if p != 1.0 or q != 0.0]
        return (min(idx), max(idx)) if idx else None

    def reflect(self) -> "JacobiMatrix":
        """Matrix of ``R J R`` with ``(R v)_n = v_{-n-1}``: ``p_n -> p_{-n}``, ``q_n -> q_{-n-1}``."""
        if self.truncated:
            lo, hi = self.range
            new_lo, new_hi = -hi, -lo - 1
            pert = {n: (self.p(-n), self.q(-n - 1)) for n in range(new_lo, new_hi + 1)}
            return JacobiMatrix(pert, (new_lo, new_hi), True)
        keys = set()
        for n in self.perturbation:
            keys.update({-n, -n - 1})
        pert = {}
        for n in keys:
            p, q = self.p(-n), self.q(-n - 1)
            if p != 1.0 or q != 0.0:
                pert[n] = (p, q)
        return JacobiMatrix(pert)

    def restricted(self, lo: int, hi: int) -> "JacobiMatrix":
        """Truncated copy on ``[lo, hi]``."""
        return JacobiMatrix({n: (self.p(n), self.q(n)) for n in range(lo, hi + 1)}, (lo, hi), True)

    def untruncated(self) -> "JacobiMatrix":
        """Treat the stored range as the full perturbation (free outside it)."""
        return JacobiMatrix(self.perturbation)

    def arrays(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        n = range(lo, hi + 1)
        return np.array([self.p(k) for k in n]), np.array([self.q(k) for k in n])

    def to_json(self) -> dict:
        out = {"perturbation": {str(n): [p, q] for n, (p, q) in self.perturbation.items()}}
        if self.range is not None:
            out["range"] = list(self.range)
            out["truncated"] = self.truncated
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "JacobiMatrix":
        pert = {int(n): tuple(v) for n, v in data.get("perturbation", {}).items()}
        rng = tuple(data["range"]) if data.get("range") is not None else None
        return cls(pert, rng, bool(data.get("truncated", False)))

    def to_csv(self, lo: int | None = None, hi: int | None = None) -> str:
        if lo is None or hi is None:
            if self.range is not None:
                lo, hi = self.range
            else:
                sup = self.support() or (0, 0)
                lo, hi = sup[0] - 2, sup[1] + 2
        rows = ["n,p_n,q_n"] + [f"{n},{self.p(n)!r},{self.q(n)!r}" for n in range(lo, hi + 1)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class CoefficientWindow:
    """Vector entries ``values[i]`` at sites ``lo + i``."""

    lo: int
    values: np.ndarray

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    @classmethod
    def indicator(cls, n: int, lo: int, hi: int) -> "CoefficientWindow":
        v = np.zeros(hi - lo + 1)
        v[n - lo] = 1.0
        return cls(lo, v)


def apply_window(J: JacobiMatrix, v: CoefficientWindow) -> CoefficientWindow:
    """``(J v)_n`` on the interior ``[lo + 1, hi - 1]`` of the window."""
    vals = np.asarray(v.values, dtype=float)
    if vals.size < 3:
        raise ValueError("window must hold at least three sites")
    sites = range(v.lo + 1, v.hi)
    p = np.array([J.p(n) for n in range(v.lo + 1, v.hi + 1)])
    q = np.array([J.q(n) for n in sites])
    out = p[:-1] * vals[:-2] + q * vals[1:-1] + p[1:] * vals[2:]
    return CoefficientWindow(v.lo + 1, out)


def distance(J1: JacobiMatrix, J2: JacobiMatrix, lo: int, hi: int) -> float:
    """``max_n max(|p_n - p'_n|, |q_n - q'_n|)`` over ``n`` in ``[lo, hi]``."""
    p1, q1 = J1.arrays(lo, hi)
    p2, q2 = J2.arrays(lo, hi)
    return float(max(np.max(np.abs(p1 - p2)), np.max(np.abs(q1 - q2))))


@dataclass(frozen=True)
class DecayReport:
    max_p_dev: float
    max_q_dev: float

    def to_json(self) -> dict:
        return {"max_p_dev": self.max_p_dev, "max_q_dev": self.max_q_dev}


def decay_check(J: JacobiMatrix, tail_from: int, side: str = "both") -> DecayReport:
    """Deviation of ``(p_n, q_n)`` from ``(1, 0)`` on the tail ``|n| >= tail_from``.

    ``side`` restricts to ``n >= tail_from`` (``"plus"``) or
    ``n <= -tail_from`` (``"minus"``).  Truncated matrices are inspected on
    their stored range only.
    """
    if side not in ("both", "plus", "minus"):
        raise ValueError(f"unknown side {side!r}")
    if J.truncated:
        sites = range(J.range[0], J.range[1] + 1)
    else:
        sites = J.perturbation.keys()

    def on_tail(n: int) -> bool:
        plus = n >= tail_from
        minus = n <= -tail_from
        return {"both": plus or minus, "plus": plus, "minus": minus}[side]

    tail = [n for n in sites if on_tail(n)]
    if not tail:
        return DecayReport(0.0, 0.0)
    return DecayReport(
        float(max(abs(J.p(n) - 1.0) for n in tail)),
        float(max(abs(J.q(n)) for n in tail)),
    )
