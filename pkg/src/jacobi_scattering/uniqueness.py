"""Does a scattering matrix determine its Jacobi matrix?

Four independent diagnostics are computed:

* the kernel products ``v_plus = s(0) K_{s_plus}(0) K_{s_minus t^-2}(0)`` and
  ``v_minus = s(0) K_{s_minus}(0) K_{s_plus t^-2}(0)``, both equal to one
  exactly in the unique case;
* the distance between the matrices rebuilt from ``s_plus`` and ``s_minus``;
* a least-squares test of whether ``(conj(t) s_minus, (s - s(0))/t)`` is a
  limit of ``(s u, P_+ s_plus u)`` with polynomial ``u``;
* the distance, in the ``s_plus`` metric, from the dual basis functions
  ``e~(0)`` and ``e~(1)`` to polynomials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circle_fn import CircleFunction, eval_in_disk
from .hankel import DEFAULT_EPS_SCHEDULE, DEFAULT_N, symbol_kernel
from .inverse_scattering import DEFAULT_M, reconstruct_dual, reconstruct_jacobi
from .jacobi import distance
from .smatrix import ScatteringMatrix

__all__ = [
    "UniquenessReport",
    "CriterionValues",
    "kernel_criterion",
    "kernel_identity_check",
    "approximation_residual",
    "density_diagnostic",
    "compare_reconstructions",
    "normalize_reflection_origin",
    "TOL_CRIT",
    "TOL_MATCH",
    "DEFAULT_DEGREES",
]

TOL_CRIT = 1e-4
TOL_MATCH = 1e-4
TOL_DENSITY = 1e-4
TOL_APPROX = 1e-4
DEFAULT_DEGREES = (0, 1, 2, 4, 8, 16, 32, 64, 128)
DISK_RADII = (0.0, 0.3, 0.6, 0.9)
DISK_ANGLES = 16


class CriterionUndefined(ValueError):
    """``s(0)`` vanishes or ``s`` is not analytic."""


def _value_at_zero(f: CircleFunction, name: str) -> float:
    if not f.is_analytic():
        raise CriterionUndefined(f"{name} has negative-index terms; {name}(0) is undefined")
    return float(f.coeff(0))


@dataclass(frozen=True)
class CriterionValues:
    v_plus: float
    v_minus: float
    s0: float
    K0: dict
    converged: bool = True

    def to_json(self) -> dict:
        return {"v_plus": self.v_plus, "v_minus": self.v_minus, "s0": self.s0, "K0": self.K0, "converged": self.converged}


def kernel_criterion(
    S: ScatteringMatrix,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> CriterionValues:
    """Both kernel products; one for each sign exactly when ``S`` determines ``J``."""
    s0 = _value_at_zero(S.s, "s")
    if s0 == 0.0:
        raise CriterionUndefined("s(0) = 0: the kernel products are undefined")
    kernels = {
        "K_s_plus": symbol_kernel(S.s_plus, N, eps_schedule),
        "K_s_minus_t^-2": symbol_kernel(S.s_minus.shift(-2), N, eps_schedule),
        "K_s_minus": symbol_kernel(S.s_minus, N, eps_schedule),
        "K_s_plus_t^-2": symbol_kernel(S.s_plus.shift(-2), N, eps_schedule),
    }
    K0 = {name: k.K0 for name, k in kernels.items()}
    return CriterionValues(
        v_plus=s0 * K0["K_s_plus"] * K0["K_s_minus_t^-2"],
        v_minus=s0 * K0["K_s_minus"] * K0["K_s_plus_t^-2"],
        s0=s0,
        K0=K0,
        converged=all(k.converged for k in kernels.values()),
    )


def _disk_points() -> list[complex]:
    pts = [0j]
    for r in DISK_RADII[1:]:
        pts += [r * np.exp(2j * np.pi * k / DISK_ANGLES) for k in range(DISK_ANGLES)]
    return pts


def kernel_identity_check(
    S: ScatteringMatrix,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> float:
    """Largest gap on disk sample points between the computed ``K_{s_plus}`` and
    ``(1 + s_minus(z)/z) / (s(z) sqrt(1 + a))``, ``a = s_minus'(0)``.

    Requires an analytic ``s_minus`` with ``s_minus(0) = 0``.
    """
    if not S.s_minus.is_analytic():
        raise ValueError("s_minus must be analytic")
    if S.s_minus.coeff(0) != 0.0:
        raise ValueError(f"s_minus(0) = {S.s_minus.coeff(0)} must vanish")
    a = float(S.s_minus.coeff(1))
    K = symbol_kernel(S.s_plus, N, eps_schedule).K
    quotient = 1.0 + S.s_minus.shift(-1)
    scale = math.sqrt(1.0 + a)
    gaps = []
    for z in _disk_points():
        sz = eval_in_disk(S.s, z)
        if sz == 0:
            raise CriterionUndefined(f"s vanishes at the sample point {z:.3g}")
        gaps.append(abs(eval_in_disk(K, z) - eval_in_disk(quotient, z) / (sz * scale)))
    return max(gaps)


def _lstsq_residuals(target: np.ndarray, columns: np.ndarray, degrees: Sequence[int]) -> list[float]:
    out = []
    for d in degrees:
        A = columns[:, : d + 1]
        coef, *_ = np.linalg.lstsq(A, target, rcond=None)
        out.append(float(np.linalg.norm(target - A @ coef)))
    return out


def _block(funcs: Sequence[CircleFunction], lo: int, hi: int) -> np.ndarray:
    return np.concatenate([f.dense(lo, hi) for f in funcs])


def _span(funcs: Sequence[CircleFunction]) -> tuple[int, int]:
    live = [f for f in funcs if not f.is_zero]
    if not live:
        return 0, 0
    return min(f.lo for f in live), max(f.hi for f in live)


def approximation_residual(S: ScatteringMatrix, degrees: Sequence[int] = DEFAULT_DEGREES) -> list[float]:
    """Least-squares residuals of
    ``min_u ||conj(t) s_minus - s u||^2 + ||(s - s(0))/t - P_+(s_plus u)||^2``
    (square root reported) over polynomials ``u`` of degree at most ``d``.
    """
    if not S.s_minus.is_analytic() or S.s_minus.coeff(0) != 0.0:
        raise ValueError("s_minus must be analytic with s_minus(0) = 0")
    s0 = _value_at_zero(S.s, "s")
    t1 = S.s_minus.shift(-1)
    t2 = (S.s - s0).shift(-1)
    dmax = max(degrees)
    cols1 = [S.s.shift(j) for j in range(dmax + 1)]
    cols2 = [(S.s_plus.shift(j)).riesz("plus") for j in range(dmax + 1)]
    lo1, hi1 = _span([t1, *cols1])
    lo2, hi2 = _span([t2, *cols2])
    target = np.concatenate([t1.dense(lo1, hi1), t2.dense(lo2, hi2)])
    columns = np.column_stack([np.concatenate([c1.dense(lo1, hi1), c2.dense(lo2, hi2)]) for c1, c2 in zip(cols1, cols2)])
    return _lstsq_residuals(target, columns, degrees)


def dual_basis_images(
    S: ScatteringMatrix,
    i: int,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> tuple[CircleFunction, CircleFunction]:
    """``(s e~(i), s psi_n)`` with ``n = -i - 1`` and ``psi_n = t**n K_{s_minus t^(2n)}``.

    ``s e~(i) = conj(t) psi_n(conj t) + s_minus psi_n`` is the dual-system
    definition; ``s psi_n`` is the partner component under the unitary pairing.
    """
    n = -i - 1
    psi = symbol_kernel(S.s_minus.shift(2 * n), N, eps_schedule, cross_check=False).K.shift(n)
    return psi.involute().shift(-1) + S.s_minus * psi, S.s * psi


def density_residuals(
    S: ScatteringMatrix,
    i: int,
    degrees: Sequence[int] = DEFAULT_DEGREES,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> list[float]:
    """``s_plus``-metric distance from ``e~(i)`` to polynomials of degree ``<= d``.

    The metric is evaluated as ``||f||^2 = (||s f||^2 + ||s f^-||^2) / 2`` with
    ``s f^- = conj(t) f(conj t) + s_plus f``, which never divides by ``s``.
    """
    h, g = dual_basis_images(S, i, N, eps_schedule)
    dmax = max(degrees)
    cols1 = [S.s.shift(j) for j in range(dmax + 1)]
    cols2 = [CircleFunction.monomial(-j - 1) + S.s_plus.shift(j) for j in range(dmax + 1)]
    lo1, hi1 = _span([h, *cols1])
    lo2, hi2 = _span([g, *cols2])
    target = np.concatenate([h.dense(lo1, hi1), g.dense(lo2, hi2)]) / math.sqrt(2.0)
    columns = np.column_stack(
        [np.concatenate([c1.dense(lo1, hi1), c2.dense(lo2, hi2)]) for c1, c2 in zip(cols1, cols2)]
    ) / math.sqrt(2.0)
    return _lstsq_residuals(target, columns, degrees)


def density_diagnostic(
    S: ScatteringMatrix,
    degrees: Sequence[int] = DEFAULT_DEGREES,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
) -> tuple[float, float]:
    """Final residuals ``(r0, r1)`` for ``e~(0)`` and ``e~(1)``."""
    return tuple(density_residuals(S, i, degrees, N, eps_schedule)[-1] for i in (0, 1))


def normalize_reflection_origin(S: ScatteringMatrix) -> tuple[ScatteringMatrix, str]:
    """Return ``S`` or its image under ``s_minus -> t^2 s_minus``, ``s_plus -> t^-2 s_plus``.

    The second map is the scattering matrix of the matrix translated by one
    site, so it preserves (non-)uniqueness while forcing ``s_minus(0) = 0``.
    """
    if S.s_minus.is_analytic() and S.s_minus.coeff(0) == 0.0:
        return S, "none"
    return (
        ScatteringMatrix(S.s, S.s_minus.shift(2), S.s_plus.shift(-2)),
        "translated one site (s_minus * t^2, s_plus * t^-2)",
    )


def _verdict(value: float, tol: float) -> str:
    if value < tol:
        return "unique"
    if value >= 10 * tol:
        return "non_unique"
    return "inconclusive"


@dataclass
class UniquenessReport:
    v_plus: float | None
    v_minus: float | None
    reconstruction_distance: float | None
    approximation_residuals: list | None
    density_residuals: tuple | None
    verdict: str
    rationale: str
    diagnostic_verdicts: dict = field(default_factory=dict)
    coherent: bool = True
    kernel_identity_defect: float | None = None
    density_sequences: dict = field(default_factory=dict)
    distance_profile: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    reconstructions: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "rationale": self.rationale,
            "coherent": self.coherent,
            "diagnostic_verdicts": self.diagnostic_verdicts,
            "v_plus": self.v_plus,
            "v_minus": self.v_minus,
            "reconstruction_distance": self.reconstruction_distance,
            "distance_profile": {str(k): v for k, v in self.distance_profile.items()},
            "approximation_residuals": self.approximation_residuals,
            "density_residuals": list(self.density_residuals) if self.density_residuals else None,
            "density_sequences": self.density_sequences,
            "kernel_identity_defect": self.kernel_identity_defect,
            "notes": self.notes,
            "tolerances": self.tolerances,
        }


def _approximation_verdict(residuals: list | None) -> str:
    # one-directional: a vanishing residual certifies, a plateau says nothing
    if residuals is None:
        return "not_applicable"
    return "unique" if residuals[-1] < TOL_APPROX else "no_evidence"


def compare_reconstructions(
    S: ScatteringMatrix,
    M: int = DEFAULT_M,
    N: int = DEFAULT_N,
    eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE,
    degrees: Sequence[int] = DEFAULT_DEGREES,
    tol_crit: float = TOL_CRIT,
    tol_match: float = TOL_MATCH,
) -> UniquenessReport:
    """Run every diagnostic and combine them into a verdict.

    ``unique`` needs both kernel products within ``tol_crit`` of one and the
    two reconstructions within ``tol_match``; ``non_unique`` needs a product at
    least ``10 tol_crit`` away and a distance of at least ``10 tol_match``.
    """
    notes: list[str] = []
    verdicts: dict[str, str] = {}
    v_plus = v_minus = dist = None
    approx = dens = ident = None
    dens_seq: dict = {}
    profile: dict = {}
    recs: dict = {}

    try:
        crit = kernel_criterion(S, N, eps_schedule)
        v_plus, v_minus = crit.v_plus, crit.v_minus
        verdicts["criterion"] = _verdict(max(abs(v_plus - 1), abs(v_minus - 1)), tol_crit)
        if not crit.converged:
            verdicts["criterion"] = "inconclusive"
            notes.append("criterion: kernel regularization did not converge")
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        verdicts["criterion"] = "inconclusive"
        notes.append(f"criterion: {exc}")

    try:
        plus = reconstruct_jacobi(S.s_plus, M, N, eps_schedule)
        minus = reconstruct_dual(S.s_minus, M, N, eps_schedule)
        recs = {"plus": plus, "minus": minus}
        dist = distance(plus.J, minus.J, -M, M)
        for n in range(-M, M + 1):
            profile[n] = max(abs(plus.J.p(n) - minus.J.p(n)), abs(plus.J.q(n) - minus.J.q(n)))
        verdicts["reconstruction"] = _verdict(dist, tol_match)
        if plus.flags or minus.flags:
            verdicts["reconstruction"] = "inconclusive"
            notes.append(f"reconstruction flags: {plus.flags or minus.flags}")
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        verdicts["reconstruction"] = "inconclusive"
        notes.append(f"reconstruction: {exc}")

    try:
        seqs = [density_residuals(S, i, degrees, N, eps_schedule) for i in (0, 1)]
        dens = (seqs[0][-1], seqs[1][-1])
        dens_seq = {"degrees": list(degrees), "e0": seqs[0], "e1": seqs[1]}
        verdicts["density"] = _verdict(max(dens), TOL_DENSITY)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        verdicts["density"] = "inconclusive"
        notes.append(f"density: {exc}")

    S2, how = normalize_reflection_origin(S)
    if how != "none":
        notes.append(f"approximation and kernel identity evaluated on S {how}")
    if S2.s_minus.is_analytic():
        try:
            approx = approximation_residual(S2, degrees)
            ident = kernel_identity_check(S2, N, eps_schedule)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            notes.append(f"approximation: {exc}")
    verdicts["approximation"] = _approximation_verdict(approx)

    crit_v, rec_v = verdicts["criterion"], verdicts["reconstruction"]
    if crit_v == rec_v == "unique":
        verdict = "unique"
        rationale = f"|v+-1|, |v--1| < {tol_crit} and reconstruction distance {dist:.3g} < {tol_match}"
    elif crit_v == rec_v == "non_unique":
        verdict = "non_unique"
        rationale = (
            f"kernel products (v+={v_plus:.6g}, v-={v_minus:.6g}) differ from 1 and "
            f"J[s+], J[s-] differ by {dist:.3g}"
        )
    else:
        verdict = "inconclusive"
        rationale = f"criterion says {crit_v}, reconstruction comparison says {rec_v}"

    two_way = {verdicts["criterion"], verdicts["reconstruction"], verdicts["density"]}
    coherent = len(two_way) == 1 and not (verdicts["approximation"] == "unique" and verdict != "unique")
    if not coherent:
        notes.append(f"diagnostics disagree: {verdicts}")

    return UniquenessReport(
        v_plus=v_plus,
        v_minus=v_minus,
        reconstruction_distance=dist,
        approximation_residuals=approx,
        density_residuals=dens,
        verdict=verdict,
        rationale=rationale,
        diagnostic_verdicts=verdicts,
        coherent=coherent,
        kernel_identity_defect=ident,
        density_sequences=dens_seq,
        distance_profile=profile,
        notes=notes,
        tolerances={"tol_crit": tol_crit, "tol_match": tol_match, "tol_density": TOL_DENSITY, "tol_approx": TOL_APPROX},
        reconstructions=recs,
    )
