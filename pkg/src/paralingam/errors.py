"""Exceptions raised by the discovery engines.

Each class carries the CLI exit code used when it escapes a command.
"""


class LingamError(Exception):
    exit_code = 1


class ZeroVariance(LingamError):
    """A variable is constant, so it cannot be normalized."""

    exit_code = 4

    def __init__(self, row, name=None):
        self.row = row
        self.name = name
        label = name if name is not None else f"row {row}"
        super().__init__(f"variable {label} has zero variance")


class PerfectCorrelation(LingamError):
    """Two variables are (numerically) perfectly correlated."""

    exit_code = 5

    def __init__(self, i, j, cov=None, names=None):
        self.i = i
        self.j = j
        self.cov = cov
        self.names = names
        a, b = (names[i], names[j]) if names is not None else (i, j)
        extra = f" (cov={cov!r})" if cov is not None else ""
        super().__init__(f"variables {a} and {b} are perfectly correlated{extra}")


class SingularDesign(LingamError):
    """Predecessor covariance is singular during strength estimation."""

    exit_code = 6

    def __init__(self, variable, pivot):
        self.variable = variable
        self.pivot = pivot
        super().__init__(
            f"predecessor design for variable {variable} is singular (pivot {pivot:.3e})"
        )


class ThresholdOverflow(LingamError):
    """The adaptive threshold exceeded its cap; scores are likely NaN."""

    exit_code = 7

    def __init__(self, gamma, cap):
        self.gamma = gamma
        self.cap = cap
        super().__init__(f"threshold {gamma:.3e} exceeded cap {cap:.3e} without a finished worker")


class IncompleteLedger(LingamError):
    """A pair is still owned by a worker when the ledger is settled."""

    exit_code = 9

    def __init__(self, pairs):
        self.pairs = pairs
        super().__init__(f"{len(pairs)} pair(s) still claimed at settlement, e.g. {pairs[:3]}")


class CellMismatch(LingamError):
    """A benchmark cell disagrees with the serial reference."""

    exit_code = 8

    def __init__(self, cell, field):
        self.cell = cell
        self.field = field
        super().__init__(f"bench cell {cell} differs from serial in {field}")
