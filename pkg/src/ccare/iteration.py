"""Riccati iteration and accelerated Riccati iteration for coupled CAREs.

Both methods replace the coupled system by a sequence of single CAREs. At
sweep ``k`` mode ``i`` solves

    (A_i - rho_i I).T X + X (A_i - rho_i I) - X S_i X
        + sum_{j != i} delta[i, j] Z_j + Q_i + 2 rho_i X_i^(k) = 0

for its stabilizing solution ``X_i^(k+1)``. The regular variant takes every
``Z_j`` from sweep ``k``; the accelerated variant uses ``Z_j = X_j^(k+1)``
for ``j < i``, so its modes must be solved in order.
"""

import csv
import enum
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from . import matcore
from .care import pbh_detectable, pbh_stabilizable, solve_care
from .errors import CcareError, DimensionMismatch, PreconditionFailed, SolverError
from .matcore import OrderResult, Relation
from .model import (DEFAULT_MARGIN, as_shifts, assemble_step_care, auto_shifts,
                    residual_max_fro, validate)

__all__ = [
    "Variant", "Direction", "IterationConfig", "SweepRecord", "IterationTrace",
    "SolveReport", "ComparePair", "CompareResult", "SweepRow",
    "resolve_shifts", "initial_iterates", "check_preconditions",
    "run", "compare_run", "shift_sweep", "augmented_first_step",
    "TRACE_HEADER", "trace_csv", "format_report", "write_atomic",
]

log = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e12


class Variant(str, enum.Enum):
    REGULAR = "regular"
    ACCELERATED = "accelerated"

    def __str__(self):
        return self.value


class Direction(str, enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    STATIONARY = "Stationary"
    MIXED = "Mixed"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class IterationConfig:
    """Settings for :func:`run`.

    Attributes
    ----------
    variant : Variant
    tol : float
        Stop once ``max_i ||X_i^(k) - X_i^(k-1)||_F < tol``.
    max_iter : int
        Sweep cap; hitting it gives ``converged=False``.
    shifts : sequence of float or None
        Explicit shifts (a scalar is broadcast). ``None`` selects
        :func:`ccare.model.auto_shifts` with `shift_margin`.
    shift_margin : float
    initial : float or sequence of arrays
        A scalar ``c >= 0`` starts every mode at ``c I``; otherwise one
        symmetric PSD matrix per mode.
    check_monotone : bool
        Record Loewner comparisons of consecutive iterates.
    check_closed_loop : bool
        Fail the run if a recorded closed loop ``A_i - rho_i I - S_i X_i^(k)``
        is not Hurwitz.
    order_tol : float
        Tolerance for the Loewner comparisons.
    residual_tol : float or None
        If set, convergence additionally requires the residual to be at most
        this value. The step criterion is never dropped.
    workers : int
        Threads used to solve the mode CAREs of a regular sweep.
    """

    variant: Variant = Variant.ACCELERATED
    tol: float = 1e-8
    max_iter: int = 500
    shifts: Optional[Union[float, Sequence[float]]] = None
    shift_margin: float = DEFAULT_MARGIN
    initial: Union[float, Sequence[np.ndarray]] = 0.0
    check_monotone: bool = True
    check_closed_loop: bool = True
    order_tol: float = matcore.ORDER_TOL
    residual_tol: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if np.ndim(self.initial) == 0 and not float(self.initial) >= 0.0:
            raise ValueError(f"scaled-identity initial value must be >= 0, got {self.initial}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def replace(self, **changes):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return IterationConfig(**d)


@dataclass(frozen=True)
class SweepRecord:
    sweep: int
    delta: float
    residual: float
    iterates: tuple
    eigvals: tuple
    closed_loop_abscissae: tuple
    relations: Optional[tuple]

    @property
    def monotone_up(self):
        if self.relations is None:
            return None
        return tuple(r.is_ge for r in self.relations)

    @property
    def monotone_down(self):
        if self.relations is None:
            return None
        return tuple(r.is_le for r in self.relations)


@dataclass
class IterationTrace:
    initial: tuple
    records: List[SweepRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def iterates(self, k):
        """Iterate tuple after sweep `k` (``k = 0`` is the starting point)."""
        return self.initial if k == 0 else self.records[k - 1].iterates

    @property
    def deltas(self):
        return [r.delta for r in self.records]

    @property
    def residuals(self):
        return [r.residual for r in self.records]


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    solution: tuple
    final_residual: float
    trace: IterationTrace
    shifts_used: tuple
    monotone_direction: Optional[Direction]
    variant: Variant
    note: str = ""


def resolve_shifts(p, cfg):
    if cfg.shifts is None:
        return auto_shifts(p, cfg.shift_margin)
    return as_shifts(cfg.shifts, p.N)


def initial_iterates(p, initial):
    """Expand an initial spec into a tuple of frozen symmetric PSD matrices."""
    if np.ndim(initial) == 0:
        c = float(initial)
        if not c >= 0.0:
            raise ValueError(f"scaled identity needs c >= 0, got {c}")
        X = c * np.eye(p.n)
        return tuple(matcore.symmetrize(X) for _ in range(p.N))
    X0 = tuple(matcore.as_symmetric(X, name=f"X0[{i}]") for i, X in enumerate(initial))
    if len(X0) != p.N:
        raise DimensionMismatch(f"expected {p.N} initial iterates, got {len(X0)}")
    for i, X in enumerate(X0):
        if X.shape != (p.n, p.n):
            raise DimensionMismatch(f"X0[{i}] is {X.shape}, expected {(p.n, p.n)}")
        if not matcore.is_psd(X):
            raise PreconditionFailed(f"initial iterate {i} is not positive semidefinite",
                                     mode=i, test="psd")
    return X0


def check_preconditions(p, rho):
    """Raise :class:`PreconditionFailed` on invalid data or a failed PBH test."""
    errors = [v for v in validate(p) if v.severity == "error"]
    if errors:
        raise PreconditionFailed("invalid problem: " + "; ".join(str(v) for v in errors))
    eye = np.eye(p.n)
    for i in range(p.N):
        Ash = p.A[i] - rho[i] * eye
        if not pbh_stabilizable(Ash, p.S[i]):
            raise PreconditionFailed(
                f"mode {i}: (A - rho I, S) is not stabilizable for rho = {rho[i]:g}",
                mode=i, test="stabilizable")
        if not pbh_detectable(Ash, p.Q[i]):
            raise PreconditionFailed(
                f"mode {i}: (A - rho I, Q) is not detectable for rho = {rho[i]:g}",
                mode=i, test="detectable")


def _solve_mode(p, rho, i, X_new, X_old, sweep):
    inst = assemble_step_care(p, rho, i, X_new, X_old)
    # Q' = Q_i + PSD terms keeps (A', Q') detectable once (A', Q_i) is, so
    # the PBH checks done before the loop cover every step.
    try:
        return solve_care(inst, check=False).X
    except CcareError as exc:
        raise SolverError(sweep, i, exc) from exc


def _sweep(p, rho, X_old, variant, sweep, pool=None):
    if variant is Variant.ACCELERATED:
        X_new = []
        for i in range(p.N):
            X_new.append(_solve_mode(p, rho, i, X_new, X_old, sweep))
        return tuple(X_new)
    if pool is not None:
        futures = [pool.submit(_solve_mode, p, rho, i, (), X_old, sweep) for i in range(p.N)]
        return tuple(f.result() for f in futures)
    return tuple(_solve_mode(p, rho, i, (), X_old, sweep) for i in range(p.N))


def _direction(records):
    rels = [r for rec in records for r in rec.relations]
    if not rels:
        return Direction.STATIONARY
    if all(r.relation is Relation.EQUAL for r in rels):
        return Direction.STATIONARY
    if all(r.is_ge for r in rels):
        return Direction.INCREASING
    if all(r.is_le for r in rels):
        return Direction.DECREASING
    return Direction.MIXED


def run(p, cfg=IterationConfig()):
    """Iterate sweeps until the step criterion holds or `max_iter` is reached.

    Non-convergence is reported through ``converged=False`` rather than an
    exception: for zero initial iterates it indicates that the coupled
    equation has no positive semidefinite solution.

    Raises
    ------
    PreconditionFailed
        Invalid problem data, invalid initial iterates, or a failed PBH test
        for a shifted pair.
    SolverError
        An inner CARE solve failed, or a closed loop was found unstable with
        ``check_closed_loop`` set.
    """
    rho = resolve_shifts(p, cfg)
    check_preconditions(p, rho)
    X = initial_iterates(p, cfg.initial)
    trace = IterationTrace(initial=X)
    blowup = DIVERGENCE_FACTOR * (1.0 + sum(matcore.fro_norm(Xi) for Xi in X))
    eye = np.eye(p.n)
    pool = None
    if cfg.variant is Variant.REGULAR and cfg.workers > 1 and p.N > 1:
        pool = ThreadPoolExecutor(max_workers=min(cfg.workers, p.N))
    converged, note = False, ""
    try:
        for k in range(1, cfg.max_iter + 1):
            X_next = _sweep(p, rho, X, cfg.variant, k, pool)
            delta = max(matcore.fro_norm(X_next[i] - X[i]) for i in range(p.N))
            residual = residual_max_fro(p, X_next)
            abscissae = tuple(matcore.spectral_abscissa(p.A[i] - rho[i] * eye - p.S[i] @ X_next[i])
                              for i in range(p.N))
            if cfg.check_closed_loop:
                for i, a in enumerate(abscissae):
                    if not a < 0.0:
                        raise SolverError(k, i, f"closed loop not Hurwitz (abscissa {a:.3e})")
            relations = None
            if cfg.check_monotone:
                relations = tuple(matcore.loewner_compare(X_next[i], X[i], cfg.order_tol)
                                  for i in range(p.N))
            trace.records.append(SweepRecord(
                sweep=k, delta=delta, residual=residual, iterates=X_next,
                eigvals=tuple(matcore.sym_eigvals(Xi) for Xi in X_next),
                closed_loop_abscissae=abscissae, relations=relations))
            log.debug("sweep %d: delta %.3e residual %.3e", k, delta, residual)
            X = X_next
            if not (math.isfinite(delta) and delta <= blowup):
                note = "diverging"
                break
            if delta < cfg.tol and (cfg.residual_tol is None or residual <= cfg.residual_tol):
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()
    direction = _direction(trace.records) if cfg.check_monotone else None
    final_residual = trace.records[-1].residual if trace.records else residual_max_fro(p, X)
    return SolveReport(converged=converged, iterations=len(trace), solution=X,
                       final_residual=final_residual, trace=trace, shifts_used=rho,
                       monotone_direction=direction, variant=cfg.variant, note=note)


@dataclass(frozen=True)
class ComparePair:
    sweep: int
    mode: int
    order: OrderResult


@dataclass
class CompareResult:
    """Accelerated (``X``) against regular (``Y``) iterates, sweep by sweep.

    `expected` is ``GreaterEqual`` for an increasing accelerated run and
    ``LessEqual`` for a decreasing one; it is ``None`` when the direction is
    stationary or mixed.
    """

    accelerated: SolveReport
    regular: SolveReport
    pairs: List[ComparePair]
    expected: Optional[Relation]

    def conforms(self, pair):
        if self.expected is Relation.GREATER_EQUAL:
            return pair.order.is_ge
        if self.expected is Relation.LESS_EQUAL:
            return pair.order.is_le
        return pair.order.relation is Relation.EQUAL

    @property
    def all_conform(self):
        return all(self.conforms(c) for c in self.pairs)


def compare_run(p, cfg=IterationConfig()):
    """Run both variants from the same start and compare their iterates.

    For every sweep both runs reached, and every mode, records
    ``loewner_compare(X_i^(k), Y_i^(k))`` with `X` accelerated and `Y`
    regular.
    """
    acc = run(p, cfg.replace(variant=Variant.ACCELERATED))
    reg = run(p, cfg.replace(variant=Variant.REGULAR))
    pairs = []
    for k in range(1, min(acc.iterations, reg.iterations) + 1):
        Xk, Yk = acc.trace.iterates(k), reg.trace.iterates(k)
        for i in range(p.N):
            pairs.append(ComparePair(k, i, matcore.loewner_compare(Xk[i], Yk[i], cfg.order_tol)))
    expected = {Direction.INCREASING: Relation.GREATER_EQUAL,
                Direction.DECREASING: Relation.LESS_EQUAL}.get(acc.monotone_direction)
    return CompareResult(acc, reg, pairs, expected)


@dataclass(frozen=True)
class SweepRow:
    shift: tuple
    variant: Variant
    iterations: Optional[int]
    final_residual: Optional[float]
    converged: bool
    error: Optional[str] = None


def shift_sweep(p, cfg, shift_values, variants=(Variant.REGULAR, Variant.ACCELERATED)):
    """One run per (shift vector, variant) from the same initial iterates.

    A failing run becomes a row with `error` set; the sweep continues. Rows
    are ordered by shift vector, then by the order of `variants`.
    """
    rows = []
    for rho in shift_values:
        rho = as_shifts(rho, p.N)
        for v in variants:
            try:
                rep = run(p, cfg.replace(variant=v, shifts=rho))
            except CcareError as exc:
                rows.append(SweepRow(rho, Variant(v), None, None, False, str(exc)))
                continue
            rows.append(SweepRow(rho, rep.variant, rep.iterations, rep.final_residual,
                                 rep.converged))
    order = {Variant(v): n for n, v in enumerate(variants)}
    rows.sort(key=lambda r: (r.shift, order[r.variant]))
    return rows


def augmented_first_step(p, cfg, delta_rho):
    """Compare one accelerated sweep under ``rho`` with one under ``rho + delta_rho``.

    Returns one :class:`OrderResult` per mode for ``X_i^(1)`` (base shifts)
    against ``Y_i^(1)`` (augmented shifts).
    """
    rho = resolve_shifts(p, cfg)
    drho = as_shifts(delta_rho, p.N)
    rho_aug = tuple(r + d for r, d in zip(rho, drho))
    check_preconditions(p, rho)
    check_preconditions(p, rho_aug)
    X0 = initial_iterates(p, cfg.initial)
    X1 = _sweep(p, rho, X0, Variant.ACCELERATED, 1)
    Y1 = _sweep(p, rho_aug, X0, Variant.ACCELERATED, 1)
    return [matcore.loewner_compare(X1[i], Y1[i], cfg.order_tol) for i in range(p.N)]


# --- export ----------------------------------------------------------------

TRACE_HEADER = ["sweep", "delta", "residual", "mode", "eig_min", "eig_max",
                "closed_loop_abscissa", "monotone_up", "monotone_down"]


def _flag(v):
    return "" if v is None else str(bool(v)).lower()


def trace_csv(report):
    """Trace as CSV text, one row per (sweep, mode)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for rec in report.trace.records:
        up, down = rec.monotone_up, rec.monotone_down
        for i, eig in enumerate(rec.eigvals):
            w.writerow([rec.sweep, repr(rec.delta), repr(rec.residual), i,
                        repr(float(eig[0])), repr(float(eig[-1])),
                        repr(rec.closed_loop_abscissae[i]),
                        _flag(up[i] if up else None),
                        _flag(down[i] if down else None)])
    return buf.getvalue()


def _fmt8(v):
    return f"{round(float(v), 8) + 0.0:.8f}"


def _fmt_shift(v):
    return repr(float(v))


def format_report(report):
    """Plain-text summary; solution entries printed to 8 decimal places."""
    lines = [
        f"variant: {report.variant}",
        f"converged: {str(report.converged).lower()}",
        f"iterations: {report.iterations}",
        "shifts: " + " ".join(_fmt_shift(r) for r in report.shifts_used),
        f"final_residual: {report.final_residual:.6e}",
        f"monotone_direction: {report.monotone_direction or 'unchecked'}",
    ]
    if report.note:
        lines.append(f"note: {report.note}")
    lines.append("solution:")
    for i, X in enumerate(report.solution):
        lines.append(f"  X[{i}]:")
        width = max(len(_fmt8(v)) for v in np.ravel(X))
        for row in X:
            lines.append("    " + "  ".join(_fmt8(v).rjust(width) for v in row))
    return "\n".join(lines) + "\n"


def write_atomic(path, text):
    """Write `text` to `path` through a temporary file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
