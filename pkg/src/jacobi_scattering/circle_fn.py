"""Finite Laurent series on the unit circle.

A :class:`CircleFunction` stores the coefficients ``c_m`` of
``f(t) = sum_m c_m t**m`` on a contiguous index window ``[lo, hi]``.
Coefficients are real, so every function satisfies ``f(conj t) = conj f(t)``
on the circle.  Products are coefficient convolutions, hence exact; grids are
only used for validation and for integrals of ``log|f|``.

Coefficient arrays may hold ``fractions.Fraction`` objects (``dtype=object``);
the Jost-solution code uses this to keep the recurrence exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "CircleFunction",
    "GridSampling",
    "OuterTest",
    "WindowOverflowError",
    "BoundStateError",
    "NotInnerError",
    "DEFAULT_GRID",
    "MAX_WINDOW",
    "laurent_algebra",
    "riesz_project",
    "eval_in_disk",
    "rational_series",
    "inner_symmetric_factory",
    "outer_test",
    "uniformizer",
]

DEFAULT_GRID = 4096
MAX_WINDOW = 1 << 16
SERIES_TOL = 1e-14
TOL_INNER = 1e-10


class WindowOverflowError(ValueError):
    """A coefficient window grew past :data:`MAX_WINDOW`."""


class BoundStateError(ValueError):
    """A denominator vanishes in the closed unit disk."""

    def __init__(self, message: str, min_modulus: float):
        super().__init__(message)
        self.min_modulus = min_modulus


class NotInnerError(ValueError):
    """A function expected to be inner is not unimodular on the circle."""

    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect


def _check_width(width: int) -> None:
    if width > MAX_WINDOW:
        raise WindowOverflowError(
            f"coefficient window of width {width} exceeds the cap {MAX_WINDOW}"
        )


@dataclass(frozen=True, eq=False)
class CircleFunction:
    """``sum_k coeffs[k] * t**(lo + k)``.

    Parameters
    ----------
    coeffs : array_like
        Real coefficients, lowest index first.  ``Fraction`` entries are kept
        exactly (object dtype).
    lo : int
        Index of ``coeffs[0]``.
    """

    coeffs: np.ndarray
    lo: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.dtype != object:
            c = np.asarray(c, dtype=float)
            if c.size and not np.all(np.isfinite(c)):
                raise ValueError("coefficients must be finite")
        c = np.atleast_1d(c).copy()
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        # strip exact zeros at both ends
        nz = np.flatnonzero(c != 0)
        if nz.size == 0:
            c, lo = c[:0], 0
        else:
            c, lo = c[nz[0]: nz[-1] + 1], int(self.lo) + int(nz[0])
        _check_width(c.size)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "lo", lo)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls) -> "CircleFunction":
        return cls(np.zeros(0), 0)

    @classmethod
    def constant(cls, c) -> "CircleFunction":
        return cls(np.array([c], dtype=object if isinstance(c, Fraction) else float))

    @classmethod
    def monomial(cls, k: int, c=1.0) -> "CircleFunction":
        return cls(np.array([c], dtype=object if isinstance(c, Fraction) else float), k)

    @classmethod
    def from_dict(cls, coeffs: Mapping) -> "CircleFunction":
        """Build from ``{index: coefficient}`` (keys may be strings)."""
        if not coeffs:
            return cls.zero()
        items = {int(k): float(v) for k, v in coeffs.items()}
        lo, hi = min(items), max(items)
        arr = np.zeros(hi - lo + 1)
        for k, v in items.items():
            arr[k - lo] = v
        return cls(arr, lo)

    @classmethod
    def from_json(cls, data: Mapping) -> "CircleFunction":
        return cls.from_dict(data["coeffs"])

    def to_json(self) -> dict:
        return {"coeffs": {str(self.lo + i): float(c) for i, c in enumerate(self.coeffs) if c != 0}}

    # -- basic properties ---------------------------------------------------
    @property
    def hi(self) -> int:
        """Highest stored index (``lo - 1`` for the zero function)."""
        return self.lo + self.coeffs.size - 1

    @property
    def window(self) -> tuple[int, int]:
        return self.lo, self.hi

    @property
    def width(self) -> int:
        return int(self.coeffs.size)

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def is_exact(self) -> bool:
        return self.coeffs.dtype == object

    def is_analytic(self) -> bool:
        """No negative-index coefficients."""
        return self.is_zero or self.lo >= 0

    def coeff(self, m: int):
        k = m - self.lo
        if 0 <= k < self.coeffs.size:
            return self.coeffs[k]
        return 0

    def dense(self, lo: int, hi: int) -> np.ndarray:
        """Float coefficients on ``[lo, hi]``; entries outside the window are dropped."""
        out = np.zeros(hi - lo + 1)
        if self.is_zero:
            return out
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a <= b:
            out[a - lo: b - lo + 1] = np.asarray(self.coeffs[a - self.lo: b - self.lo + 1], dtype=float)
        return out

    def to_float(self) -> "CircleFunction":
        return CircleFunction(np.asarray(self.coeffs, dtype=float), self.lo)

    def __repr__(self) -> str:
        terms = ", ".join(f"{self.lo + i}: {c}" for i, c in enumerate(self.coeffs))
        return f"CircleFunction({{{terms}}})"

    # -- algebra ------------------------------------------------------------
    def _pad_to(self, lo: int, hi: int, dtype) -> np.ndarray:
        out = np.zeros(hi - lo + 1, dtype=dtype)
        if dtype == object:
            out[:] = Fraction(0)
        if not self.is_zero:
            out[self.lo - lo: self.hi - lo + 1] = self.coeffs
        return out

    def __add__(self, other) -> "CircleFunction":
        if not isinstance(other, CircleFunction):
            other = CircleFunction.constant(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        dtype = object if (self.is_exact and other.is_exact) else float
        return CircleFunction(self._pad_to(lo, hi, dtype) + other._pad_to(lo, hi, dtype), lo)

    __radd__ = __add__

    def __neg__(self) -> "CircleFunction":
        return CircleFunction(-self.coeffs, self.lo)

    def __sub__(self, other) -> "CircleFunction":
        if not isinstance(other, CircleFunction):
            other = CircleFunction.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "CircleFunction":
        return (-self) + other

    def __mul__(self, other) -> "CircleFunction":
        if isinstance(other, CircleFunction):
            if self.is_zero or other.is_zero:
                return CircleFunction.zero()
            _check_width(self.width + other.width - 1)
            if self.is_exact != other.is_exact:
                a, b = np.asarray(self.coeffs, float), np.asarray(other.coeffs, float)
            else:
                a, b = self.coeffs, other.coeffs
            return CircleFunction(np.convolve(a, b), self.lo + other.lo)
        return CircleFunction(self.coeffs * other, self.lo)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "CircleFunction":
        return CircleFunction(self.coeffs / c, self.lo)

    def shift(self, k: int) -> "CircleFunction":
        """Multiply by ``t**k``."""
        return CircleFunction(self.coeffs, self.lo + k)

    def involute(self) -> "CircleFunction":
        """``f(1/t)``: coefficient ``c_{-m}`` at index ``m``."""
        return CircleFunction(self.coeffs[::-1], -self.hi) if not self.is_zero else self

    def conj(self) -> "CircleFunction":
        """Pointwise complex conjugate on the circle (equals :meth:`involute` for real coefficients)."""
        return self.involute()

    def riesz(self, sign: str = "plus") -> "CircleFunction":
        if sign == "plus":
            return self.restrict(0, None)
        if sign == "minus":
            return self.restrict(None, -1)
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")

    def restrict(self, lo: int | None, hi: int | None) -> "CircleFunction":
        """Keep only indices in ``[lo, hi]`` (open ends when None)."""
        if self.is_zero:
            return self
        a = self.lo if lo is None else max(lo, self.lo)
        b = self.hi if hi is None else min(hi, self.hi)
        if a > b:
            return CircleFunction.zero()
        return CircleFunction(self.coeffs[a - self.lo: b - self.lo + 1], a)

    def truncate(self, tol: float) -> "CircleFunction":
        """Drop leading/trailing coefficients with modulus below ``tol``."""
        if self.is_zero:
            return self
        mags = np.abs(np.asarray(self.coeffs, dtype=float))
        keep = np.flatnonzero(mags >= tol)
        if keep.size == 0:
            return CircleFunction.zero()
        return CircleFunction(self.coeffs[keep[0]: keep[-1] + 1], self.lo + int(keep[0]))

    def equals(self, other: "CircleFunction", tol: float = 0.0) -> bool:
        if self.is_zero and other.is_zero:
            return True
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        if tol == 0.0 and self.is_exact and other.is_exact:
            return bool(np.all(self._pad_to(lo, hi, object) == other._pad_to(lo, hi, object)))
        return float(np.max(np.abs(self.dense(lo, hi) - other.dense(lo, hi)))) <= tol

    # -- evaluation ---------------------------------------------------------
    def __call__(self, zeta: complex) -> complex:
        return eval_in_disk(self, zeta)

    def samples(self, size: int = DEFAULT_GRID, offset: float = 0.0) -> "GridSampling":
        """Values at ``t_k = exp(2 pi i (k + offset) / size)``."""
        return GridSampling.of(self, size, offset)

    def sup_norm(self, size: int = DEFAULT_GRID) -> float:
        return float(np.max(np.abs(self.samples(size).values))) if not self.is_zero else 0.0

    def l2_norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.coeffs, dtype=float)))


@dataclass(frozen=True)
class GridSampling:
    """Samples of a function on an equispaced grid of the unit circle."""

    size: int
    values: np.ndarray
    offset: float = 0.0

    @classmethod
    def of(cls, f: CircleFunction, size: int = DEFAULT_GRID, offset: float = 0.0) -> "GridSampling":
        if size < 4 or size & (size - 1):
            raise ValueError(f"grid size must be a power of two >= 4, got {size}")
        if f.width > size:
            raise ValueError(f"grid of {size} points aliases a window of width {f.width}")
        c = np.asarray(f.coeffs, dtype=float)
        if offset:
            c = c * np.exp(2j * np.pi * offset * np.arange(f.lo, f.hi + 1) / size)
        wrapped = np.zeros(size, dtype=complex)
        np.add.at(wrapped, np.arange(f.lo, f.hi + 1) % size, c)
        return cls(size, np.fft.ifft(wrapped) * size, offset)

    @property
    def points(self) -> np.ndarray:
        return np.exp(2j * np.pi * (np.arange(self.size) + self.offset) / self.size)

    def to_csv(self) -> str:
        rows = ["index,re,im"]
        rows += [f"{k},{v.real!r},{v.imag!r}" for k, v in enumerate(self.values)]
        return "\n".join(rows) + "\n"


def laurent_algebra(f: CircleFunction, g: CircleFunction | None, op: str) -> CircleFunction:
    """Dispatch ``add``/``mul``/``conj``/``involute`` on circle functions."""
    if op == "add":
        return f + g
    if op == "mul":
        return f * g
    if op == "conj":
        return f.conj()
    if op == "involute":
        return f.involute()
    raise ValueError(f"unknown operation {op!r}")


def riesz_project(f: CircleFunction, sign: str = "plus") -> CircleFunction:
    return f.riesz(sign)


def eval_in_disk(f: CircleFunction, zeta: complex) -> complex:
    """Evaluate the Laurent sum at ``zeta`` with ``|zeta| <= 1``.

    Functions with negative-index terms may only be evaluated on the circle.
    """
    zeta = complex(zeta)
    r = abs(zeta)
    if r > 1 + 1e-12:
        raise ValueError(f"|zeta| = {r} lies outside the closed disk")
    if f.is_zero:
        return 0j
    if f.lo < 0 and abs(r - 1) > 1e-12:
        raise ValueError("a function with negative-index terms is only defined on the circle")
    c = np.asarray(f.coeffs, dtype=float)
    if f.lo >= 0:
        return complex(np.polyval(c[::-1], zeta)) * zeta ** f.lo
    return complex(np.sum(c * zeta ** np.arange(f.lo, f.hi + 1)))


def uniformizer() -> CircleFunction:
    """``z(t) = 1/t + t``."""
    return CircleFunction(np.array([1.0, 0.0, 1.0]), -1)


def _polynomial_roots(p: CircleFunction) -> np.ndarray:
    c = np.asarray(p.coeffs, dtype=float)
    # negligible leading coefficients only push roots towards infinity
    top = np.flatnonzero(np.abs(c) > 1e-16 * np.abs(c).max())[-1]
    c = c[: top + 1]
    if c.size <= 1:
        return np.zeros(0)
    return np.roots(c[::-1])


def _deflate(p: CircleFunction, root: float) -> CircleFunction:
    """Divide by ``(t - root)``; the caller guarantees ``p(root) = 0``."""
    q, _ = np.polydiv(np.asarray(p.coeffs, dtype=float)[::-1], [1.0, -root])
    return CircleFunction(q[::-1], p.lo)


def cancel_boundary_factors(
    num: CircleFunction, den: CircleFunction, tol: float = 1e-12
) -> tuple[CircleFunction, CircleFunction]:
    """Remove common factors ``(t - 1)`` and ``(t + 1)`` from a Laurent fraction."""
    for root in (1.0, -1.0):
        while (
            den.width > 1
            and num.width > 1
            and abs(eval_in_disk(den, root)) <= tol * max(1.0, den.l2_norm())
            and abs(eval_in_disk(num, root)) <= tol * max(1.0, num.l2_norm())
        ):
            num, den = _deflate(num, root), _deflate(den, root)
    return num, den


def rational_series(
    num: CircleFunction,
    den: CircleFunction,
    tol: float = SERIES_TOL,
    max_terms: int = MAX_WINDOW // 2,
) -> CircleFunction:
    """Laurent expansion on the circle of ``num / den``.

    ``den`` must have the form ``t**a * P(t)`` with ``P`` zero-free on the
    closed disk, so ``1/P`` is a power series with geometric decay.  The series
    is cut where the geometric tail bound drops below ``tol``.

    Raises
    ------
    BoundStateError
        If ``P`` has a zero with modulus ``<= 1 + 1e-10``.
    """
    if den.is_zero:
        raise ZeroDivisionError("denominator is the zero function")
    if num.is_zero:
        return CircleFunction.zero()
    num, den = cancel_boundary_factors(num.to_float(), den.to_float())
    poly = den.shift(-den.lo)
    roots = _polynomial_roots(poly)
    if roots.size:
        rmin = float(np.min(np.abs(roots)))
        if rmin <= 1 + 1e-10:
            raise BoundStateError(
                f"denominator has a zero of modulus {rmin:.6g} in the closed unit disk", rmin
            )
        # |1/P coefficient_k| <= C k^(mult-1) rmin^-k; pad for the polynomial factor
        n_terms = int(math.ceil(math.log(tol) / -math.log(rmin))) + 8 * roots.size + 16
        if n_terms > max_terms:
            raise WindowOverflowError(
                f"series for 1/P needs {n_terms} terms (nearest zero at {rmin:.6g})"
            )
    else:
        n_terms = 1
    impulse = np.zeros(n_terms)
    impulse[0] = 1.0
    inv = lfilter([1.0], np.asarray(poly.coeffs, dtype=float), impulse)
    out = num.to_float() * CircleFunction(inv, -den.lo)
    return out.truncate(tol * 1e-3)


def inner_symmetric_factory(
    monomial_degree: int,
    real_zeros: Sequence[float] = (),
    tol_inner: float = TOL_INNER,
    grid: int = DEFAULT_GRID,
) -> CircleFunction:
    """``t**k * prod (t - a)/(1 - a t)`` expanded on the circle.

    Real zeros keep the coefficients real, which makes the result symmetric.

    Raises
    ------
    ValueError
        If a zero lies outside the open disk or ``monomial_degree < 0``.
    NotInnerError
        If the truncated expansion misses ``|Phi| = 1`` by more than ``tol_inner``.
    """
    if monomial_degree < 0:
        raise ValueError("monomial degree must be nonnegative")
    num = CircleFunction.monomial(int(monomial_degree))
    den = CircleFunction.constant(1.0)
    for a in real_zeros:
        a = float(a)
        if not abs(a) < 1:
            raise ValueError(f"Blaschke zero {a} is not inside the unit disk")
        num = num * CircleFunction(np.array([-a, 1.0]))
        den = den * CircleFunction(np.array([1.0, -a]))
    phi = rational_series(num, den, tol=SERIES_TOL)
    defect = inner_defect(phi, grid)
    if defect > tol_inner:
        raise NotInnerError(
            f"truncated inner function misses |Phi|=1 by {defect:.3g} (window {phi.window})", defect
        )
    return phi


def inner_defect(f: CircleFunction, grid: int = DEFAULT_GRID) -> float:
    """``max | |f(t)| - 1 |`` over the grid; ``inf`` when ``f`` is not analytic."""
    if f.is_zero:
        return 1.0
    if not f.is_analytic():
        return math.inf
    size = max(grid, 1 << int(math.ceil(math.log2(max(f.width, 4)))))
    return float(np.max(np.abs(np.abs(f.samples(size).values) - 1.0)))


@dataclass(frozen=True)
class OuterTest:
    """Result of :func:`outer_test`."""

    is_outer: bool
    defect: float
    inconclusive: bool = False
    excluded_points: int = 0

    def to_json(self) -> dict:
        return {
            "is_outer": self.is_outer,
            "defect": None if math.isinf(self.defect) else self.defect,
            "inconclusive": self.inconclusive,
            "excluded_points": self.excluded_points,
        }


def outer_test(f: CircleFunction, tol: float = 1e-3, grid: int = DEFAULT_GRID) -> OuterTest:
    """Compare ``log|f(0)|`` with the circle mean of ``log|f|``.

    The mean uses the half-step offset grid so that boundary zeros at
    ``t = +-1`` never land on a node; nodes with ``|f| < 1e-13`` are excluded
    and counted.  A boundary zero contributes an ``O(log(2)/grid)`` bias.
    """
    if f.is_zero or not f.is_analytic():
        return OuterTest(False, math.inf, inconclusive=f.is_zero)
    f0 = abs(eval_in_disk(f, 0.0))
    if f0 == 0.0:
        return OuterTest(False, math.inf, inconclusive=True)
    mags = np.abs(f.samples(grid, offset=0.5).values)
    ok = mags >= 1e-13
    mean_log = float(np.sum(np.log(mags[ok]))) / grid
    defect = abs(math.log(f0) - mean_log)
    return OuterTest(defect < tol, defect, excluded_points=int(np.count_nonzero(~ok)))


def exact(values: Iterable, lo: int = 0) -> CircleFunction:
    """Circle function with exact ``Fraction`` coefficients."""
    return CircleFunction(np.array([Fraction(v) for v in values], dtype=object), lo)
