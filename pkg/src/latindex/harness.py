"""Topological predictions, index counts, sign calibration and sweeps.

Predictions for the Wilson-Dirac index use the coefficient ``I_n(m)`` times
the topological charge of the gauge field (the lattice Chern number on the
2-torus, ``q1 * q2`` for product fields on the 4-torus), times a global sign
``epsilon`` measured once by :func:`calibrate_sign`.
"""

from __future__ import annotations

import csv
import functools
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .clifford import clifford_rep
from .gauge import (
    apply_gauge_transform,
    embed_field,
    flux_gauge_field_t2,
    lattice_chern_number_t2,
    product_gauge_field_t4,
    random_gauge_transform,
)
from .linalg import (
    AmbiguousCount,
    HermitianOperator,
    Spectrum,
    count_above,
    hermitian_eigen,
)
from .quantizer import quantize, quantizer_trace
from .symbols import (
    Symbol,
    TrigPoly,
    chern_integral,
    constant_symbol,
    f_dw_symbol,
    test_projection_t2,
    theta_exponential,
    x_function,
)
from .wilson import wilson_dirac, wilson_dirac_fixed_mass

__all__ = [
    "ChamberError",
    "CalibrationError",
    "ConfigError",
    "Chamber",
    "GlobalSign",
    "ExperimentRecord",
    "SweepConfig",
    "CSV_COLUMNS",
    "EXPERIMENTS",
    "NEAR_WALL",
    "i_coefficient",
    "i_coefficient_sign_sum",
    "index_defect",
    "lattice_index_count",
    "calibrate_sign",
    "parse_config",
    "run_experiment",
    "write_csv",
    "empirical_k",
    "empirical_m0",
    "trace_symbol",
]

CSV_COLUMNS = (
    "experiment", "n", "k", "N", "m", "r", "q1", "q2", "seed",
    "count_pos", "dim", "defect", "predicted", "matched", "min_abs_eig", "wall_ms",
)
EXPERIMENTS = ("wilson-index", "fixed-mass", "bs-index", "trace-check")
CONFIG_KEYS = {"experiment", "n", "k", "N", "m", "r", "q", "threshold", "grid", "seed", "gap_tol"}
NEAR_WALL = 0.2
WALL_TOL = 1e-12
TRACE_TOL = 1e-9
CHERN_INT_TOL = 1e-3
CHERN_IMAG_TOL = 1e-6


class ChamberError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- coefficients


@dataclass(frozen=True)
class Chamber:
    """Mass m for even n, away from the walls {0, 2, ..., 2n}."""

    n: int
    m: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2 or self.n % 2:
            raise ChamberError(f"n must be an even integer >= 2, got {self.n!r}")
        if not math.isfinite(self.m):
            raise ChamberError(f"mass must be finite, got {self.m}")
        wall = self.nearest_wall
        if abs(self.m - wall) <= WALL_TOL:
            raise ChamberError(f"m={self.m} lies on the wall {wall} (walls are 0, 2, ..., {2 * self.n})")

    @property
    def nearest_wall(self) -> int:
        return int(min(range(0, 2 * self.n + 1, 2), key=lambda w: abs(self.m - w)))

    @property
    def near_wall(self) -> bool:
        return abs(self.m - self.nearest_wall) < NEAR_WALL


def i_coefficient(n: int, m: float) -> int:
    """``sum_{i <= l} (-1)^i C(n, i)`` for ``2l < m < 2l + 2``; 0 outside [0, 2n]."""
    Chamber(n, m)
    if m < 0 or m > 2 * n:
        return 0
    l = int(m // 2)
    return sum((-1) ** i * math.comb(n, i) for i in range(l + 1))


def i_coefficient_sign_sum(n: int, m: float) -> int:
    """Sum of ``(-1)^{#pi}`` over corners of {0, pi}^n with ``sum(cos - 1) + m > 0``."""
    Chamber(n, m)
    total = 0
    for corner in itertools.product((0, 1), repeat=n):
        flips = sum(corner)
        if m - 2 * flips > 0:
            total += (-1) ** flips
    return total


# ---------------------------------------------------------------- counting


def index_defect(h: HermitianOperator | Spectrum, gap_tol: float | None = None) -> int:
    """``rank E_{>0}(h) - dim/2``."""
    dim = h.dim if isinstance(h, HermitianOperator) else len(h)
    if dim % 2:
        raise ValueError(f"index defect needs an even dimension, got {dim}")
    return count_above(h, 0.0, gap_tol) - dim // 2


def lattice_index_count(f: Symbol, k: int, threshold: float = 0.0, gap_tol: float | None = None) -> int:
    """``rank E_{>threshold}(phi^k(f))``.

    Use threshold 0 for invertible self-adjoint symbols and 1/2 for projections.
    """
    return count_above(quantize(f, k).hermitian(), threshold, gap_tol)


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True)
class GlobalSign:
    epsilon: int
    provenance: str


CALIBRATION_RUN = {"k": 12, "q": 1, "m": 0.5, "r": 1.0}


@functools.lru_cache(maxsize=None)
def calibrate_sign() -> GlobalSign:
    """Measure epsilon on the flux q=1, k=12, n=2, m=0.5, r=1 Wilson-Dirac operator."""
    run = CALIBRATION_RUN
    field_ = flux_gauge_field_t2(run["k"], run["q"])
    op = wilson_dirac(field_, clifford_rep(2), run["m"], run["r"])
    defect = index_defect(op.operator)
    predicted = run["q"] * i_coefficient(2, run["m"])
    if abs(defect) != 1:
        raise CalibrationError(f"calibration defect {defect} is not +-1; operator assembly is inconsistent")
    provenance = "wilson-index n=2 k={k} q={q} m={m} r={r}".format(**run) + f" defect={defect}"
    return GlobalSign(defect * predicted, provenance)


# ---------------------------------------------------------------- records


@dataclass
class ExperimentRecord:
    experiment: str
    n: int
    k: int
    N: int
    m: float | None
    r: float | None
    q1: int | None
    q2: int | None
    seed: int | None
    count_pos: int | None
    dim: int
    defect: int | None
    predicted: int | None
    matched: bool
    min_abs_eig: float | None
    wall_ms: float
    note: str = ""

    def csv_row(self) -> list[str]:
        row = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            if v is None:
                row.append("")
            elif isinstance(v, bool):
                row.append("true" if v else "false")
            elif isinstance(v, float):
                row.append(repr(v))
            else:
                row.append(str(v))
        return row


def write_csv(records: Iterable[ExperimentRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow(rec.csv_row())


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class SweepConfig:
    experiment: str
    n: int
    k: tuple[int, ...]
    N: int = 1
    m: tuple[float, ...] = (0.5,)
    r: float = 1.0
    q: tuple[tuple[int, int | None], ...] = ((1, None),)
    threshold: float = 0.5
    grid: int | None = None
    seed: int | None = None
    gap_tol: float | None = None

    def jobs(self) -> list[dict]:
        out = []
        for idx, (k, m, (q1, q2)) in enumerate(itertools.product(self.k, self.m, self.q)):
            job = asdict(self)
            job.update(k=k, m=m, q1=q1, q2=q2, index=idx)
            del job["q"]
            out.append(job)
        return out


def _int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(value)


def _real(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return float(value)


def _list(value, name: str) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list, got {value!r}")
    return list(value)


def parse_config(obj: Mapping[str, Any], seed: int | None = None) -> SweepConfig:
    """Validate a sweep config; ``seed`` overrides the config seed."""
    if not isinstance(obj, Mapping):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    exp = obj.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
    if "k" not in obj:
        raise ConfigError("config needs a k list")
    default_n = 2 if exp in ("wilson-index", "fixed-mass") else 1
    n = _int(obj.get("n", default_n), "n")
    ks = tuple(_int(k, "k") for k in _list(obj["k"], "k"))
    if any(k < 2 for k in ks):
        raise ConfigError("every k must be >= 2")
    N = _int(obj.get("N", 1), "N")
    if N < 1:
        raise ConfigError("N must be >= 1")
    r = _real(obj.get("r", 1.0), "r")
    if r <= 0:
        raise ConfigError("r must be positive")
    ms = tuple(_real(m, "m") for m in _list(obj.get("m", [0.5]), "m"))
    threshold = _real(obj.get("threshold", 0.5), "threshold")
    grid = obj.get("grid")
    grid = None if grid is None else _int(grid, "grid")
    gap_tol = obj.get("gap_tol")
    gap_tol = None if gap_tol is None else _real(gap_tol, "gap_tol")
    if gap_tol is not None and gap_tol <= 0:
        raise ConfigError("gap_tol must be positive")
    cfg_seed = obj.get("seed")
    cfg_seed = None if cfg_seed is None else _int(cfg_seed, "seed")
    if seed is not None:
        cfg_seed = seed

    if exp in ("wilson-index", "fixed-mass"):
        if n not in (2, 4):
            raise ConfigError(f"{exp} supports n in {{2, 4}}, got {n}")
        default_q = [1] if n == 2 else [[1, 1]]
        qs = []
        for q in _list(obj.get("q", default_q), "q"):
            if n == 2:
                qs.append((_int(q, "q"), None))
            else:
                pair = _list(q, "q pair")
                if len(pair) != 2:
                    raise ConfigError(f"n=4 needs [q1, q2] pairs, got {q!r}")
                qs.append((_int(pair[0], "q1"), _int(pair[1], "q2")))
        if exp == "fixed-mass" and r != 1.0:
            raise ConfigError("fixed-mass runs use r = 1; m holds the mass M")
        if exp == "wilson-index":
            for m in ms:
                try:
                    Chamber(n, m)
                except ChamberError as exc:
                    raise ConfigError(str(exc)) from None
    else:
        if "q" in obj:
            raise ConfigError(f"{exp} takes no flux q")
        qs = [(None, None)]
        if exp == "bs-index" and n not in (1, 2):
            raise ConfigError("bs-index supports n in {1, 2}")
        if exp == "bs-index" and n == 2:
            for m in ms:
                try:
                    Chamber(2, m)
                except ChamberError as exc:
                    raise ConfigError(str(exc)) from None
        if exp == "trace-check" and not 1 <= n <= 3:
            raise ConfigError("trace-check supports n in {1, 2, 3}")
        if exp == "trace-check" and any(k < 3 for k in ks):
            raise ConfigError("trace-check needs k >= 3")
        if exp == "bs-index" and n == 1 and "m" in obj:
            raise ConfigError("bs-index with n=1 uses the fixed test projection and takes no m")
        if exp == "bs-index" and n == 1 or exp == "trace-check":
            ms = (None,)
    return SweepConfig(exp, n, ks, N, ms, r, tuple(qs), threshold, grid, cfg_seed, gap_tol)


# ---------------------------------------------------------------- jobs


def trace_symbol(n: int, N: int = 1) -> Symbol:
    """``f_0 = (2 + sum_i cos 2 pi x_i) Id_N`` plus a theta-mode that carries no trace."""
    shape = (3,) * n + (N, N)
    coef = np.zeros(shape, dtype=np.complex128)
    centre = (1,) * n
    coef[centre] = 2 * np.eye(N)
    for i in range(n):
        for s in (0, 2):
            idx = list(centre)
            idx[i] = s
            coef[tuple(idx)] += 0.5 * np.eye(N)
    f0 = x_function(TrigPoly(coef, n))
    e1 = tuple([1] + [0] * (n - 1))
    off = theta_exponential(e1, TrigPoly(coef * 0.5j, n), d=N)
    return f0 + off + off.adjoint()


def _row_seed(seed: int | None, index: int):
    return None if seed is None else np.random.SeedSequence([seed, index])


def _wilson_job(job: dict, epsilon: int, fixed: bool) -> ExperimentRecord:
    n, k, N, m, r = job["n"], job["k"], job["N"], job["m"], job["r"]
    q1, q2 = job["q1"], job["q2"]
    if n == 2:
        base = flux_gauge_field_t2(k, q1)
        charge = lattice_chern_number_t2(base)
    else:
        base = product_gauge_field_t4(k, q1, q2)
        charge = q1 * q2
    fld = embed_field(base, N)
    row_seed = _row_seed(job["seed"], job["index"])
    if row_seed is not None:
        fld = apply_gauge_transform(fld, random_gauge_transform(fld.lattice, N, row_seed))
    c = clifford_rep(n)
    op = wilson_dirac_fixed_mass(fld, c, m) if fixed else wilson_dirac(fld, c, m, r)
    spec = hermitian_eigen(op.operator)
    w = spec.eigenvalues
    # the fixed-mass corollary predicts the continuum index, i.e. the (0, 2) chamber
    coef = 1 if fixed else i_coefficient(n, m)
    predicted = epsilon ** (n // 2) * charge * coef
    rec = _record(job, dim=op.dim, predicted=predicted, min_abs_eig=float(np.min(np.abs(w))))
    tol = job["gap_tol"] if job["gap_tol"] is not None else 1e-8 * max(float(np.max(np.abs(w))), 1e-300)
    _count(rec, spec, 0.0, tol)
    if not fixed and Chamber(n, m).near_wall:
        rec.note = _join(rec.note, "near wall")
    return rec


def _bs_job(job: dict) -> ExperimentRecord:
    n, k = job["n"], job["k"]
    threshold = job["threshold"]
    if n == 1:
        p = test_projection_t2()
        u = p * 2.0 - constant_symbol(np.eye(2), 1)
        counted = p if threshold > 0 else u
    else:
        u = f_dw_symbol(clifford_rep(2), job["m"], job["r"])
        if threshold != 0:
            raise ValueError("bs-index with n=2 counts f_DW at threshold 0")
        counted = u
    value = chern_integral(u, k, job["grid"])
    h = quantize(counted, k).hermitian()
    spec = hermitian_eigen(h)
    dim = h.dim
    predicted = round(value.real) - dim // 2
    rec = _record(job, dim=dim, predicted=predicted,
                  min_abs_eig=float(np.min(np.abs(spec.eigenvalues - threshold))))
    _count(rec, spec, threshold, job["gap_tol"])
    if abs(value.real - round(value.real)) > CHERN_INT_TOL or abs(value.imag) > CHERN_IMAG_TOL:
        rec.matched = False
        rec.note = _join(rec.note, f"Chern integral {value:.6g} is not an integer")
    return rec


def _trace_job(job: dict) -> ExperimentRecord:
    n, k, N = job["n"], job["k"], job["N"]
    f = trace_symbol(n, N)
    tr = quantizer_trace(f, k)
    predicted = 2 * N * k**n
    deviation = abs(tr - predicted)
    return _record(job, dim=N * k**n, predicted=predicted, min_abs_eig=float(deviation),
                   count_pos=int(round(tr.real)), matched=deviation <= TRACE_TOL,
                   note="min_abs_eig holds |trace deviation|")


def _record(job: dict, **kw) -> ExperimentRecord:
    base = dict(
        experiment=job["experiment"], n=job["n"], k=job["k"], N=job["N"], m=job.get("m"),
        r=job["r"] if job["experiment"] != "trace-check" else None,
        q1=job.get("q1"), q2=job.get("q2"), seed=job["seed"],
        count_pos=None, dim=0, defect=None, predicted=None, matched=False,
        min_abs_eig=None, wall_ms=0.0,
    )
    base.update(kw)
    return ExperimentRecord(**base)


def _count(rec: ExperimentRecord, spec: Spectrum, level: float, gap_tol) -> None:
    try:
        rec.count_pos = count_above(spec, level, gap_tol)
    except AmbiguousCount as exc:
        rec.note = _join(rec.note, f"ambiguous count: {exc}")
        rec.matched = False
        return
    rec.defect = rec.count_pos - rec.dim // 2
    rec.matched = rec.defect == rec.predicted


def _join(a: str, b: str) -> str:
    return f"{a}; {b}" if a else b


def _run_job(job: dict, epsilon: int) -> ExperimentRecord:
    t0 = time.perf_counter()
    exp = job["experiment"]
    try:
        if exp == "wilson-index":
            rec = _wilson_job(job, epsilon, fixed=False)
        elif exp == "fixed-mass":
            rec = _wilson_job(job, epsilon, fixed=True)
        elif exp == "bs-index":
            rec = _bs_job(job)
        else:
            rec = _trace_job(job)
    except Exception as exc:  # recorded per row, the sweep goes on
        rec = _record(job, note=f"{type(exc).__name__}: {exc}")
    rec.wall_ms = round((time.perf_counter() - t0) * 1e3, 3)
    return rec


def run_experiment(
    config: Mapping[str, Any] | SweepConfig,
    out=None,
    jobs: int = 1,
    seed: int | None = None,
) -> list[ExperimentRecord]:
    """Run every grid point of ``config``; results keep the grid order.

    Rows are independent jobs on a pool of ``jobs`` worker processes. If
    ``out`` is given the records are written there as CSV.
    """
    cfg = config if isinstance(config, SweepConfig) else parse_config(config, seed)
    grid = cfg.jobs()
    epsilon = calibrate_sign().epsilon if grid and cfg.experiment in ("wilson-index", "fixed-mass") else 1
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_job, grid, itertools.repeat(epsilon)))
    else:
        records = [_run_job(job, epsilon) for job in grid]
    if out is not None:
        write_csv(records, Path(out))
    return records


# ---------------------------------------------------------------- summaries


def _groups(records: Sequence[ExperimentRecord], key) -> dict:
    groups: dict = {}
    for rec in records:
        groups.setdefault(key(rec), []).append(rec)
    return groups


def _onset(rows: list[ExperimentRecord], attr: str):
    """Smallest ``attr`` value from which every larger tested value matched."""
    rows = sorted(rows, key=lambda rec: getattr(rec, attr))
    onset = None
    for rec in reversed(rows):
        if not rec.matched:
            break
        onset = getattr(rec, attr)
    return onset


def empirical_k(records: Sequence[ExperimentRecord]) -> dict:
    """Per (experiment, n, N, m, r, q1, q2): smallest k with a matched plateau above it."""
    groups = _groups(records, lambda rec: (rec.experiment, rec.n, rec.N, rec.m, rec.r, rec.q1, rec.q2))
    return {key: _onset(rows, "k") for key, rows in groups.items()}


def _longest_run(rows: list[ExperimentRecord], attr: str) -> tuple[Any, int]:
    rows = sorted(rows, key=lambda rec: getattr(rec, attr))
    best, start, length = (None, 0), None, 0
    for rec in rows:
        if rec.matched:
            if length == 0:
                start = getattr(rec, attr)
            length += 1
            if length > best[1]:
                best = (start, length)
        else:
            length = 0
    return best


def empirical_m0(records: Sequence[ExperimentRecord]) -> dict:
    """Per (n, k, N, q1, q2) of fixed-mass rows: ``(M0, plateau length)``.

    The plateau is the longest run of consecutive matched masses in ascending
    order and M0 its first mass. At finite k the run ends near ``M = 2k``,
    where the first doublers turn on.
    """
    rows = [rec for rec in records if rec.experiment == "fixed-mass"]
    groups = _groups(rows, lambda rec: (rec.n, rec.k, rec.N, rec.q1, rec.q2))
    return {key: _longest_run(g, "m") for key, g in groups.items()}
