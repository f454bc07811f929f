"""Exception hierarchy for the ccare package."""


class CcareError(Exception):
    """Base class for all errors raised by ccare."""


class DimensionMismatch(CcareError, ValueError):
    pass


class IndexOutOfRange(CcareError, IndexError):
    pass


class AsymmetricMatrix(CcareError, ValueError):
    pass


class NonFiniteEntries(CcareError, ValueError):
    pass


class NotPositiveSemidefinite(CcareError, ValueError):
    pass


class EigenFailure(CcareError, ArithmeticError):
    """The eigensolver did not converge."""


class UnstableCoefficient(CcareError, ArithmeticError):
    """A coefficient matrix that must be Hurwitz is not."""


class SingularSystem(CcareError, ArithmeticError):
    pass


class NotStabilizable(CcareError, ValueError):
    pass


class NotDetectable(CcareError, ValueError):
    pass


class SubspaceFailure(CcareError, ArithmeticError):
    """The stable invariant subspace of a Hamiltonian could not be used.

    Raised when fewer or more than ``n`` stable eigenvalues are found, when the
    leading block of the basis is singular, or when the recovered solution fails
    its residual check.
    """


class NoConvergence(CcareError, ArithmeticError):
    pass


class PreconditionFailed(CcareError, ValueError):
    """A shifted pair failed a PBH test, or the problem data is invalid."""

    def __init__(self, message, mode=None, test=None):
        super().__init__(message)
        self.mode = mode
        self.test = test


class SolverError(CcareError, ArithmeticError):
    """An inner CARE solve failed at a given sweep and mode."""

    def __init__(self, sweep, mode, cause):
        super().__init__(f"CARE solve failed at sweep {sweep}, mode {mode}: {cause}")
        self.sweep = sweep
        self.mode = mode
        self.cause = cause


class ParseError(CcareError, ValueError):
    """Malformed problem or initial-iterate file."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


class UnknownExample(CcareError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown example"
