"""Command line driver: configuration, experiment runners and result files.

Every run writes ``<prefix>.json`` plus flat CSV tables next to it.  Files are
written to a temporary name and renamed into place.  Exit codes: 0 when every
stage passed, 2 when the uniqueness verdict is inconclusive, 1 when a stage
failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from .circle_fn import DEFAULT_GRID, CircleFunction, inner_symmetric_factory
from .direct_scattering import scattering_data
from .hankel import DEFAULT_EPS_SCHEDULE, DEFAULT_N
from .inverse_scattering import DEFAULT_M, reconstruct_dual, reconstruct_jacobi
from .jacobi import JacobiMatrix, distance
from .smatrix import (
    TOL_OUTER,
    TOL_UNITARY,
    ScatteringMatrix,
    analytic_smatrix,
    repair,
    validate,
)
from .uniqueness import (
    DEFAULT_DEGREES,
    TOL_CRIT,
    TOL_MATCH,
    compare_reconstructions,
    kernel_criterion,
)

__all__ = [
    "ExperimentConfig",
    "RunResult",
    "EXPERIMENTS",
    "SHIPPED_EXAMPLES",
    "load_input",
    "run_experiment",
    "run_roundtrip",
    "run_nonuniq",
    "run_repair_search",
    "main",
]

log = logging.getLogger(__name__)

EXPERIMENTS = ("roundtrip", "nonuniq", "repair_search", "criterion", "validate", "direct", "inverse")
EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2

DEFAULT_TOLERANCES = {
    "unitary": TOL_UNITARY,
    "outer": TOL_OUTER,
    "crit": TOL_CRIT,
    "match": TOL_MATCH,
    "roundtrip": 1e-6,
    "half_axis": 1e-6,
}
DEFAULT_CANDIDATES = (
    {"k": 1, "zeros": []},
    {"k": 2, "zeros": []},
    {"k": 3, "zeros": []},
    {"k": 0, "zeros": [0.5]},
    {"k": 1, "zeros": [0.5]},
)

# inputs every acceptance check runs over
SHIPPED_EXAMPLES = {
    "free": {"jacobi": {"perturbation": {}}},
    "rank3_a": {"rank3": [0.9, 0.3, -0.2]},
    "rank3_b": {"rank3": [0.5, -0.4, 0.1]},
    "delta_t2": {"delta": {"k": 2, "zeros": []}},
    "delta_t4": {"delta": {"k": 4, "zeros": []}},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    input: Any = None
    N: int = DEFAULT_N
    M: int = DEFAULT_M
    grid: int = DEFAULT_GRID
    eps_schedule: list = field(default_factory=lambda: list(DEFAULT_EPS_SCHEDULE))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    degrees: list = field(default_factory=lambda: list(DEFAULT_DEGREES))
    candidates: list = field(default_factory=lambda: [dict(c) for c in DEFAULT_CANDIDATES])
    output: str = "out/run"

    def __post_init__(self):
        self.experiment = self.experiment.replace("-", "_")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}
        bad = {k: v for k, v in self.tolerances.items() if not (isinstance(v, (int, float)) and v > 0)}
        if bad:
            raise ConfigError(f"tolerances must be positive: {bad}")
        if not all(e > 0 for e in self.eps_schedule):
            raise ConfigError("eps_schedule entries must be positive")
        if self.M < 1:
            raise ConfigError("M must be positive")
        if self.N < 4 * self.M:
            raise ConfigError(f"N = {self.N} must be at least 4M = {4 * self.M}")
        if self.grid < 4 or self.grid & (self.grid - 1):
            raise ConfigError("grid must be a power of two >= 4")
        if self.experiment == "repair_search" and not self.candidates:
            raise ConfigError("repair search needs at least one candidate")

    @classmethod
    def from_file(cls, path: str | os.PathLike, **overrides) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    report: dict
    tables: dict
    exit_code: int
    files: list = field(default_factory=list)


def _resolve(source: Any) -> Any:
    if isinstance(source, (str, os.PathLike)):
        return json.loads(Path(source).read_text())
    return source


def load_input(source: Any) -> JacobiMatrix | ScatteringMatrix:
    """Build the experiment input from a JSON path or an inline dict.

    Accepted shapes: a JacobiMatrix (``perturbation``), a ScatteringMatrix
    (``s``, ``s_minus``, ``s_plus``), ``{"rank3": [p0, q0, qm1]}`` or
    ``{"delta": {"k": k, "zeros": [...]}}`` for the analytic matrix.
    """
    data = _resolve(source)
    if data is None:
        raise ConfigError("no input given")
    if "jacobi" in data:
        data = data["jacobi"]
    if "perturbation" in data:
        return JacobiMatrix.from_json(data)
    if "s" in data:
        return ScatteringMatrix.from_json(data)
    if "rank3" in data:
        return JacobiMatrix.rank3(*data["rank3"])
    if "delta" in data:
        return analytic_smatrix(_inner(data["delta"]))
    raise ConfigError(f"unrecognized input keys {sorted(data)}")


def _inner(params: dict) -> CircleFunction:
    return inner_symmetric_factory(int(params.get("k", 0)), params.get("zeros", []))


def _coeff_csv(J: JacobiMatrix, lo: int, hi: int) -> str:
    return J.to_csv(lo, hi)


def _smatrix_csv(S: ScatteringMatrix) -> str:
    fs = (S.s, S.s_minus, S.s_plus)
    lo = min(f.lo for f in fs if not f.is_zero)
    hi = max(f.hi for f in fs if not f.is_zero)
    rows = ["m,s,s_minus,s_plus"]
    rows += [f"{m},{float(S.s.coeff(m))!r},{float(S.s_minus.coeff(m))!r},{float(S.s_plus.coeff(m))!r}" for m in range(lo, hi + 1)]
    return "\n".join(rows) + "\n"


def _disagreement_csv(Jp: JacobiMatrix, Jm: JacobiMatrix, lo: int, hi: int) -> str:
    rows = ["n,p_plus,q_plus,p_minus,q_minus,abs_dp,abs_dq"]
    for n in range(lo, hi + 1):
        pp, qp, pm, qm = Jp.p(n), Jp.q(n), Jm.p(n), Jm.q(n)
        rows.append(f"{n},{pp!r},{qp!r},{pm!r},{qm!r},{abs(pp - pm)!r},{abs(qp - qm)!r}")
    return "\n".join(rows) + "\n"


class _Stages:
    """Runs named stages, recording results or the failure message."""

    def __init__(self):
        self.record: dict = {}
        self.failed = False

    def run(self, name: str, fn: Callable[[], Any]) -> Any:
        try:
            out = fn()
        except Exception as exc:  # noqa: BLE001 - every stage failure is reported, not raised
            log.warning("stage %s failed: %s", name, exc)
            self.record[name] = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
            self.failed = True
            return None
        self.record[name] = {"ok": True}
        return out


def _exit_code(stages: _Stages, verdict: str | None = None) -> int:
    if stages.failed:
        return EXIT_FAIL
    if verdict == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _half_axis(Jp: JacobiMatrix, Jm: JacobiMatrix, M: int) -> dict:
    """Deviation from the free matrix of ``J[s+]`` on sites ``>= 1`` and ``J[s-]`` on ``<= -2``."""
    plus = max(max(abs(Jp.q(n)) for n in range(1, M + 1)), max(abs(Jp.p(n) - 1) for n in range(2, M + 1)))
    minus = max(max(abs(Jm.q(n)) for n in range(-M, -1)), max(abs(Jm.p(n) - 1) for n in range(-M, -1)))
    return {"plus_on_n_ge_1": plus, "minus_on_n_le_-2": minus}


def _reconstruct_pair(cfg: ExperimentConfig, S: ScatteringMatrix, stages: _Stages):
    plus = stages.run("reconstruct_plus", lambda: reconstruct_jacobi(S.s_plus, cfg.M, cfg.N, cfg.eps_schedule))
    minus = stages.run("reconstruct_minus", lambda: reconstruct_dual(S.s_minus, cfg.M, cfg.N, cfg.eps_schedule))
    return plus, minus


def _uniqueness(cfg: ExperimentConfig, S: ScatteringMatrix, stages: _Stages):
    return stages.run(
        "uniqueness",
        lambda: compare_reconstructions(
            S, cfg.M, cfg.N, cfg.eps_schedule, cfg.degrees, cfg.tolerances["crit"], cfg.tolerances["match"]
        ),
    )


def run_roundtrip(cfg: ExperimentConfig) -> RunResult:
    """``J -> S -> (J[s+], J[s-])`` with distances to the input and the uniqueness report."""
    stages = _Stages()
    report: dict = {"config": cfg.to_json()}
    tables: dict = {}
    J = stages.run("load", lambda: load_input(cfg.input))
    if J is not None and not isinstance(J, JacobiMatrix):
        stages.record["load"] = {"ok": False, "error": "roundtrip needs a Jacobi matrix input"}
        stages.failed, J = True, None
    if J is not None:
        report["input"] = J.to_json()
        tables["input"] = _coeff_csv(J, -cfg.M, cfg.M)
        data = stages.run("direct", lambda: scattering_data(J))
        if data is not None:
            S = data.S
            report["smatrix"] = S.to_json()
            report["provenance"] = data.provenance()
            tables["smatrix"] = _smatrix_csv(S)
            val = stages.run("validate", lambda: validate(S, cfg.tolerances["unitary"], cfg.tolerances["outer"], cfg.grid))
            if val is not None:
                report["validation"] = val.to_json()
                if not val.passed:
                    stages.record["validate"] = {"ok": False, "error": "scattering matrix fails validation"}
                    stages.failed = True
            plus, minus = _reconstruct_pair(cfg, S, stages)
            dist = {}
            for name, rec in (("plus", plus), ("minus", minus)):
                if rec is None:
                    continue
                report[f"J_{name}"] = rec.to_json()
                tables[f"J_{name}"] = _coeff_csv(rec.J, -cfg.M, cfg.M)
                dist[f"J_{name}_vs_input"] = distance(rec.J, J, -cfg.M, cfg.M)
            if plus is not None and minus is not None:
                dist["J_plus_vs_J_minus"] = distance(plus.J, minus.J, -cfg.M, cfg.M)
            report["distances"] = dist
            over = {k: v for k, v in dist.items() if k.endswith("input") and not v < cfg.tolerances["roundtrip"]}
            if over:
                stages.record["roundtrip_distance"] = {"ok": False, "error": f"distances above tolerance: {over}"}
                stages.failed = True
            uq = _uniqueness(cfg, S, stages)
            if uq is not None:
                report["uniqueness"] = uq.to_json()
    report["stages"] = stages.record
    verdict = report.get("uniqueness", {}).get("verdict")
    return RunResult(report, tables, _exit_code(stages, verdict))


def run_nonuniq(cfg: ExperimentConfig) -> RunResult:
    """Analytic ``S`` from ``Delta``: both reconstructions, their disagreement and the criterion."""
    stages = _Stages()
    report: dict = {"config": cfg.to_json()}
    tables: dict = {}
    S = stages.run("load", lambda: load_input(cfg.input))
    if S is not None and not isinstance(S, ScatteringMatrix):
        stages.record["load"] = {"ok": False, "error": "nonuniq needs a scattering matrix or delta input"}
        stages.failed, S = True, None
    if S is not None:
        report["smatrix"] = S.to_json()
        tables["smatrix"] = _smatrix_csv(S)
        plus, minus = _reconstruct_pair(cfg, S, stages)
        if plus is not None and minus is not None:
            report["J_plus"] = plus.to_json()
            report["J_minus"] = minus.to_json()
            report["distance"] = distance(plus.J, minus.J, -cfg.M, cfg.M)
            ha = _half_axis(plus.J, minus.J, cfg.M)
            report["half_axis_deviation"] = ha
            report["half_axis_ok"] = all(v < cfg.tolerances["half_axis"] for v in ha.values())
            tables["disagreement"] = _disagreement_csv(plus.J, minus.J, -cfg.M, cfg.M)
        crit = stages.run("criterion", lambda: kernel_criterion(S, cfg.N, cfg.eps_schedule))
        if crit is not None:
            report["criterion"] = crit.to_json()
        uq = _uniqueness(cfg, S, stages)
        if uq is not None:
            report["uniqueness"] = uq.to_json()
    report["stages"] = stages.record
    verdict = report.get("uniqueness", {}).get("verdict")
    return RunResult(report, tables, _exit_code(stages, verdict))


def _candidate_label(c: dict) -> str:
    parts = [f"t^{c.get('k', 0)}"] if c.get("k", 0) else []
    parts += [f"B({a})" for a in c.get("zeros", [])]
    return "*".join(parts) or "1"


def run_repair_search(cfg: ExperimentConfig) -> RunResult:
    """Criterion and verdict of ``S_Phi`` for every candidate inner ``Phi``."""
    if not cfg.candidates:
        raise ConfigError("repair search needs at least one candidate")
    stages = _Stages()
    report: dict = {"config": cfg.to_json()}
    tables: dict = {}
    S = stages.run("load", lambda: load_input(cfg.input))
    if isinstance(S, JacobiMatrix):
        S = stages.run("direct", lambda: scattering_data(S).S)
    rows = ["candidate,v_plus,v_minus,verdict,s_unchanged,s_minus_phi_analytic"]
    results = []
    if S is not None:
        report["base_smatrix"] = S.to_json()
        for c in cfg.candidates:
            label = _candidate_label(c)
            entry: dict = {"candidate": label, "params": c}
            try:
                phi = _inner(c)
                SP = repair(S, phi)
                crit = kernel_criterion(SP, cfg.N, cfg.eps_schedule)
                dev = max(abs(crit.v_plus - 1), abs(crit.v_minus - 1))
                tol = cfg.tolerances["crit"]
                verdict = "unique" if dev < tol else "non_unique" if dev >= 10 * tol else "inconclusive"
                entry.update(
                    {
                        "v_plus": crit.v_plus,
                        "v_minus": crit.v_minus,
                        "verdict": verdict,
                        "s_unchanged": SP.s.equals(S.s),
                        "s_minus_phi_analytic": SP.s_minus.is_analytic() if S.s_minus.is_analytic() else None,
                    }
                )
            except Exception as exc:  # noqa: BLE001 - a rejected candidate is a per-candidate result
                entry.update({"rejected": True, "error": f"{type(exc).__name__}: {exc}", "verdict": "rejected"})
            results.append(entry)
            rows.append(
                f"{label},{entry.get('v_plus', '')},{entry.get('v_minus', '')},{entry['verdict']},"
                f"{entry.get('s_unchanged', '')},{entry.get('s_minus_phi_analytic', '')}"
            )
        stages.record["search"] = {"ok": True}
    report["candidates"] = results
    winners = [r["candidate"] for r in results if r.get("verdict") == "unique"]
    report["summary"] = {
        "any_unique": bool(winners),
        "unique_candidates": winners,
        "note": "a candidate reaching 'unique' is an experimental finding; none is expected a priori",
    }
    tables["candidates"] = "\n".join(rows) + "\n"
    report["stages"] = stages.record
    return RunResult(report, tables, _exit_code(stages))


def run_validate(cfg: ExperimentConfig) -> RunResult:
    stages = _Stages()
    report: dict = {"config": cfg.to_json()}
    S = stages.run("load", lambda: load_input(cfg.input))
    if isinstance(S, JacobiMatrix):
        S = stages.run("direct", lambda: scattering_data(S).S)
    if S is not None:
        val = validate(S, cfg.tolerances["unitary"], cfg.tolerances["outer"], cfg.grid)
        report["validation"] = val.to_json()
        if not val.passed:
            stages.record["validate"] = {"ok": False, "error": "scattering matrix fails validation"}
            stages.failed = True
    report["stages"] = stages.record
    return RunResult(report, {}, _exit_code(stages))


def run_direct(cfg: ExperimentConfig) -> RunResult:
    stages = _Stages()
    report: dict = {"config": cfg.to_json()}
    tables: dict = {}
    J = stages.run("load", lambda: load_input(cfg.input))
    if J is not None:
        data = stages.run("direct", lambda: scattering_data(J))
        if data is not None:
            report["smatrix"] = data.S.to_json()
            report["provenance"] = data.provenance()
            report["validation"] = validate(data.S, cfg.tolerances["unitary"], cfg.tolerances["outer"], cfg.grid).to_json()
            tables["smatrix"] = _smatrix_csv(data.S)
    report["stages"] = stages.record
    return RunResult(report, tables, _exit_code(stages))


def run_inverse(cfg: ExperimentConfig) -> RunResult:
    stages = _Stages()
    report: dict = {"config": cfg.to_json()}
    tables: dict = {}
    S = stages.run("load", lambda: load_input(cfg.input))
    if isinstance(S, JacobiMatrix):
        S = stages.run("direct", lambda: scattering_data(S).S)
    if S is not None:
        plus, minus = _reconstruct_pair(cfg, S, stages)
        for name, rec in (("plus", plus), ("minus", minus)):
            if rec is not None:
                report[f"J_{name}"] = rec.to_json()
                tables[f"J_{name}"] = _coeff_csv(rec.J, -cfg.M, cfg.M)
    report["stages"] = stages.record
    return RunResult(report, tables, _exit_code(stages))


def run_criterion(cfg: ExperimentConfig) -> RunResult:
    stages = _Stages()
    report: dict = {"config": cfg.to_json()}
    S = stages.run("load", lambda: load_input(cfg.input))
    if isinstance(S, JacobiMatrix):
        S = stages.run("direct", lambda: scattering_data(S).S)
    verdict = None
    if S is not None:
        crit = stages.run("criterion", lambda: kernel_criterion(S, cfg.N, cfg.eps_schedule))
        if crit is not None:
            report["criterion"] = crit.to_json()
            dev = max(abs(crit.v_plus - 1), abs(crit.v_minus - 1))
            tol = cfg.tolerances["crit"]
            verdict = "unique" if dev < tol else "non_unique" if dev >= 10 * tol else "inconclusive"
            report["verdict"] = verdict
    report["stages"] = stages.record
    return RunResult(report, {}, _exit_code(stages, verdict))


_RUNNERS = {
    "roundtrip": run_roundtrip,
    "nonuniq": run_nonuniq,
    "repair_search": run_repair_search,
    "validate": run_validate,
    "direct": run_direct,
    "inverse": run_inverse,
    "criterion": run_criterion,
}


def _clean(obj: Any) -> Any:
    """Replace non-finite floats so the JSON stays strict."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(result: RunResult, prefix: str) -> list[Path]:
    base = Path(prefix)
    files = [base.with_name(base.name + ".json")]
    _atomic_write(files[0], json.dumps(_clean(result.report), indent=2, sort_keys=True) + "\n")
    for name, text in sorted(result.tables.items()):
        path = base.with_name(f"{base.name}_{name}.csv")
        _atomic_write(path, text)
        files.append(path)
    result.files = files
    return files


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    result = _RUNNERS[cfg.experiment](cfg)
    result.report["exit_code"] = result.exit_code
    if write:
        write_outputs(result, cfg.output)
    return result


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jacobi-scattering", description="Scattering and inverse scattering for Jacobi matrices.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("validate", "direct", "inverse", "roundtrip", "nonuniq", "repair-search", "criterion"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment configuration")
        sp.add_argument("--input", help="JSON input (overrides the config's input)")
        sp.add_argument("--out", help="output path prefix")
        sp.add_argument("--n", type=int, help="Hankel truncation order")
        sp.add_argument("--m", type=int, help="reconstruction half-width")
        sp.add_argument("--grid", type=int, help="circle sampling size")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    overrides = {"N": args.n, "M": args.m, "grid": args.grid, "output": args.out, "input": args.input}
    experiment = args.command.replace("-", "_")
    try:
        if args.config:
            cfg = ExperimentConfig.from_file(args.config, **overrides)
            if cfg.experiment != experiment:
                cfg = replace(cfg, experiment=experiment)
        else:
            cfg = ExperimentConfig(experiment, **{k: v for k, v in overrides.items() if v is not None})
    except (ConfigError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    result = run_experiment(cfg)
    summary = result.report.get("uniqueness", {}).get("verdict") or result.report.get("verdict")
    print(f"{cfg.experiment}: exit {result.exit_code}" + (f", verdict {summary}" if summary else ""))
    for path in result.files:
        print(f"  wrote {path}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
