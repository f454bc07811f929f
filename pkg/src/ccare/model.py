"""Coupled CARE problem data, residuals, shifts and per-step CARE assembly.

Mode indices are 0-based throughout the Python API.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import matcore
from .care import CareInstance, _riccati_lhs
from .errors import (DimensionMismatch, IndexOutOfRange, NonFiniteEntries,
                     NotPositiveSemidefinite, ParseError, UnknownExample)

__all__ = [
    "DEFAULT_MARGIN", "CcareProblem", "Violation",
    "validate", "ccare_residual", "residual_max_fro", "auto_shifts",
    "as_shifts", "assemble_step_care",
    "problem_from_dict", "problem_to_dict", "loads_problem", "dumps_problem",
    "load_problem", "bundled_examples", "bundled_problem", "bundled_text",
]

DEFAULT_MARGIN = 0.01


@dataclass(frozen=True)
class CcareProblem:
    """Data of ``A_i.T X_i + X_i A_i - X_i S_i X_i + sum_j delta[i, j] X_j + Q_i = 0``.

    Shapes are checked and matrices are frozen on construction. The
    sign/PSD/row-sum requirements are reported by :func:`validate` rather than
    raised, so that invalid data can still be inspected.
    """

    A: tuple
    S: tuple
    Q: tuple
    delta: np.ndarray

    def __post_init__(self):
        A = tuple(matcore.as_matrix(a, square=True, name=f"A[{i}]")
                  for i, a in enumerate(self.A))
        S = tuple(matcore.as_symmetric(s, name=f"S[{i}]") for i, s in enumerate(self.S))
        Q = tuple(matcore.as_symmetric(q, name=f"Q[{i}]") for i, q in enumerate(self.Q))
        N = len(A)
        if N == 0:
            raise DimensionMismatch("a problem needs at least one mode")
        if len(S) != N or len(Q) != N:
            raise DimensionMismatch(f"got {N} A's, {len(S)} S's and {len(Q)} Q's")
        n = A[0].shape[0]
        for i in range(N):
            for name, M in (("A", A[i]), ("S", S[i]), ("Q", Q[i])):
                if M.shape != (n, n):
                    raise DimensionMismatch(f"{name}[{i}] is {M.shape}, expected {(n, n)}")
        delta = matcore.as_matrix(self.delta, name="delta")
        if delta.shape != (N, N):
            raise DimensionMismatch(f"delta is {delta.shape}, expected {(N, N)}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "delta", delta)

    @property
    def N(self):
        return len(self.A)

    @property
    def n(self):
        return self.A[0].shape[0]

    def permuted(self, order):
        """The same problem with modes relabelled so new mode k is old ``order[k]``."""
        order = list(order)
        d = self.delta[np.ix_(order, order)]
        return CcareProblem([self.A[k] for k in order], [self.S[k] for k in order],
                            [self.Q[k] for k in order], d)


@dataclass(frozen=True)
class Violation:
    rule: str
    where: str
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.severity}: {self.where}: {self.message} [{self.rule}]"


def validate(p):
    """List every violated problem invariant.

    Errors are negative PSD tests on ``S_i`` / ``Q_i``, a nonzero diagonal
    coupling, a negative off-diagonal coupling, and (for ``N >= 2``) a row of
    couplings summing to zero. The row-sum rule is only evaluated on rows
    whose entries are all nonnegative. A single-mode problem yields one
    ``severity="note"`` entry and nothing else.
    """
    out = []
    for i in range(p.N):
        if not matcore.is_psd(p.S[i]):
            out.append(Violation("psd", f"S[{i}]", "S is not positive semidefinite"))
        if not matcore.is_psd(p.Q[i]):
            out.append(Violation("psd", f"Q[{i}]", "Q is not positive semidefinite"))
    d = p.delta
    for i in range(p.N):
        row_ok = True
        for j in range(p.N):
            if i == j:
                if d[i, j] != 0.0:
                    out.append(Violation("zero diagonal", f"delta[{i}][{j}]",
                                         f"diagonal coupling must be 0, got {d[i, j]:g}"))
            elif d[i, j] < 0.0:
                row_ok = False
                out.append(Violation("negative coupling", f"delta[{i}][{j}]",
                                     f"negative coupling {d[i, j]:g}"))
        if p.N >= 2 and row_ok and not sum(d[i, j] for j in range(p.N) if j != i) > 0.0:
            out.append(Violation("zero row sum", f"delta[{i}]",
                                 "off-diagonal couplings of this row sum to zero"))
    if p.N == 1:
        out.append(Violation("single mode", "N", "N = 1: the problem is a plain CARE",
                             severity="note"))
    return out


def _check_iterates(p, X):
    if len(X) != p.N:
        raise DimensionMismatch(f"expected {p.N} iterates, got {len(X)}")
    for j, Xj in enumerate(X):
        if np.shape(Xj) != (p.n, p.n):
            raise DimensionMismatch(f"X[{j}] is {np.shape(Xj)}, expected {(p.n, p.n)}")


def _check_mode(p, i):
    if not 0 <= i < p.N:
        raise IndexOutOfRange(f"mode {i} out of range for N = {p.N}")


def ccare_residual(p, X, i):
    """Symmetrized residual of equation `i` at the tuple `X`."""
    _check_iterates(p, X)
    _check_mode(p, i)
    R = _riccati_lhs(p.A[i], p.S[i], np.asarray(X[i], dtype=float))
    for j in range(p.N):
        if j != i:
            R = R + p.delta[i, j] * np.asarray(X[j], dtype=float)
    return matcore.symmetrize(R + p.Q[i])


def residual_max_fro(p, X):
    """``max_i ||R_i(X)||_F``."""
    return max(matcore.fro_norm(ccare_residual(p, X, i)) for i in range(p.N))


def auto_shifts(p, margin=DEFAULT_MARGIN):
    """Smallest shifts ``rho_i = max(0, abscissa(A_i) + margin)``.

    Each nonzero shift makes ``A_i - rho_i I`` Hurwitz, which satisfies both
    PBH conditions vacuously.
    """
    if not margin > 0.0:
        raise ValueError(f"margin must be positive, got {margin}")
    return tuple(max(0.0, matcore.spectral_abscissa(A) + margin) for A in p.A)


def as_shifts(rho, N):
    """Validate an explicit shift vector; a scalar is broadcast to all modes."""
    if np.ndim(rho) == 0:
        rho = [float(rho)] * N
    rho = tuple(float(r) for r in rho)
    if len(rho) != N:
        raise DimensionMismatch(f"expected {N} shifts, got {len(rho)}")
    if not all(np.isfinite(r) for r in rho):
        raise NonFiniteEntries("shifts must be finite")
    if any(r < 0.0 for r in rho):
        raise ValueError(f"shifts must be nonnegative, got {rho}")
    return rho


def assemble_step_care(p, rho, i, X_new, X_old):
    """Build the CARE whose stabilizing solution is the next iterate of mode `i`.

    The returned instance has ``A' = A_i - rho_i I``, ``S' = S_i`` and
    ``Q' = Q_i + sum_{j != i} delta[i, j] Z_j + 2 rho_i X_old[i]`` where
    ``Z_j = X_new[j]`` for ``j < i`` when `X_new` is non-empty (accelerated
    sweep) and ``Z_j = X_old[j]`` otherwise (regular sweep).

    Raises
    ------
    NotPositiveSemidefinite
        If ``Q'`` fails the PSD test, which can only happen when an iterate
        or shift is invalid.
    """
    _check_mode(p, i)
    _check_iterates(p, X_old)
    accelerated = len(X_new) > 0
    if accelerated and len(X_new) < i:
        raise DimensionMismatch(
            f"accelerated assembly of mode {i} needs {i} updated iterates, got {len(X_new)}")
    Qp = np.array(p.Q[i], dtype=float)
    for j in range(p.N):
        if j == i:
            continue
        Z = X_new[j] if (accelerated and j < i) else X_old[j]
        if np.shape(Z) != (p.n, p.n):
            raise DimensionMismatch(f"iterate {j} is {np.shape(Z)}")
        Qp = Qp + p.delta[i, j] * np.asarray(Z, dtype=float)
    Qp = Qp + 2.0 * rho[i] * np.asarray(X_old[i], dtype=float)
    Ap = p.A[i] - rho[i] * np.eye(p.n)
    try:
        return CareInstance(Ap, p.S[i], Qp)
    except NotPositiveSemidefinite as exc:
        raise NotPositiveSemidefinite(f"mode {i}: assembled {exc}") from None


# --- problem files ---------------------------------------------------------

def _read_matrix(obj, fld):
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ParseError("expected a non-empty array of rows", field=fld)
    width = len(obj[0])
    for r in obj:
        if len(r) != width:
            raise ParseError("rows have different lengths", field=fld)
        for v in r:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ParseError(f"non-numeric entry {v!r}", field=fld)
    try:
        return matcore.as_matrix(obj, name=fld)
    except (DimensionMismatch, NonFiniteEntries) as exc:
        raise ParseError(str(exc), field=fld) from None


def problem_from_dict(data):
    """Build a :class:`CcareProblem` from the decoded problem-file mapping.

    Each mode carries ``A``, ``Q`` and exactly one of ``S`` or ``B``; a factor
    ``B`` is converted to ``S = B B.T`` here.
    """
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    for key in ("n", "N", "modes", "delta"):
        if key not in data:
            raise ParseError("missing required field", field=key)
    n, N = data["n"], data["N"]
    for key, v in (("n", n), ("N", N)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ParseError(f"must be a positive integer, got {v!r}", field=key)
    modes = data["modes"]
    if not isinstance(modes, list) or len(modes) != N:
        raise ParseError(f"expected an array of {N} mode records", field="modes")
    A, S, Q = [], [], []
    for i, m in enumerate(modes):
        where = f"modes[{i}]"
        if not isinstance(m, dict):
            raise ParseError("mode record must be an object", field=where)
        for key in ("A", "Q"):
            if key not in m:
                raise ParseError("missing required field", field=f"{where}.{key}")
        if ("S" in m) == ("B" in m):
            raise ParseError("exactly one of S or B is required", field=where)
        Ai = _read_matrix(m["A"], f"{where}.A")
        Qi = _read_matrix(m["Q"], f"{where}.Q")
        if "S" in m:
            Si = _read_matrix(m["S"], f"{where}.S")
        else:
            Bi = _read_matrix(m["B"], f"{where}.B")
            if Bi.shape[0] != n:
                raise ParseError(f"B must have {n} rows", field=f"{where}.B")
            Si = Bi @ Bi.T
        for key, M in (("A", Ai), ("S", Si), ("Q", Qi)):
            if M.shape != (n, n):
                raise ParseError(f"expected {n}x{n}, got {M.shape[0]}x{M.shape[1]}",
                                 field=f"{where}.{key}")
        A.append(Ai)
        S.append(Si)
        Q.append(Qi)
    delta = _read_matrix(data["delta"], "delta")
    if delta.shape != (N, N):
        raise ParseError(f"expected {N}x{N}", field="delta")
    try:
        return CcareProblem(A, S, Q, delta)
    except (DimensionMismatch, ValueError) as exc:
        raise ParseError(str(exc)) from None


def _rows(M):
    return [[float(v) for v in row] for row in np.asarray(M)]


def problem_to_dict(p):
    return {
        "n": p.n,
        "N": p.N,
        "modes": [{"A": _rows(p.A[i]), "S": _rows(p.S[i]), "Q": _rows(p.Q[i])}
                  for i in range(p.N)],
        "delta": _rows(p.delta),
    }


def _dump_matrix(M, indent):
    pad = " " * indent
    rows = [json.dumps(r) for r in M]
    return "[\n" + ",\n".join(pad + "  " + r for r in rows) + "\n" + pad + "]"


def dumps_problem(p):
    """Canonical JSON text for `p`: one matrix row per line, trailing newline."""
    d = problem_to_dict(p)
    parts = ["{", f'  "n": {d["n"]},', f'  "N": {d["N"]},', '  "modes": [']
    mode_txt = []
    for m in d["modes"]:
        fields = [f'      "{k}": {_dump_matrix(m[k], 6)}' for k in ("A", "S", "Q")]
        mode_txt.append("    {\n" + ",\n".join(fields) + "\n    }")
    parts.append(",\n".join(mode_txt))
    parts.append("  ],")
    parts.append(f'  "delta": {_dump_matrix(d["delta"], 2)}')
    parts.append("}")
    return "\n".join(parts) + "\n"


def loads_problem(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return problem_from_dict(data)


def load_problem(path):
    with open(path, encoding="utf-8") as fh:
        return loads_problem(fh.read())


_BUNDLED = {"ivanov_example1": "ivanov_example1.json"}


def bundled_examples():
    return sorted(_BUNDLED)


def bundled_text(name):
    """Exact text of a shipped problem file."""
    if name not in _BUNDLED:
        raise UnknownExample(f"unknown example {name!r}; available: {', '.join(bundled_examples())}")
    return resources.files("ccare").joinpath("data", _BUNDLED[name]).read_text(encoding="utf-8")


def bundled_problem(name):
    return loads_problem(bundled_text(name))
