"""Exception types raised across the library."""


class SketchLsqError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SketchLsqError, ValueError):
    """Operand shapes are incompatible."""


class RankDeficient(SketchLsqError):
    """A matrix that must have full column rank does not."""


class ConvergenceFailure(SketchLsqError):
    """An iterative routine hit its iteration cap before its tolerance."""


class NotPowerOfTwo(SketchLsqError, ValueError):
    """The transform length must be a power of two."""


class IndexOutOfRange(SketchLsqError, IndexError):
    """A requested row index falls outside [0, n)."""


class InvalidEpsilon(SketchLsqError, ValueError):
    """The accuracy parameter is outside the range the method supports."""


class InvalidSparsity(SketchLsqError, ValueError):
    """The sparsity parameter q must lie in (0, 1]."""


class ZeroRhs(SketchLsqError, ValueError):
    """The right-hand side vector is identically zero."""


class InvalidGamma(SketchLsqError, ValueError):
    """The in-range norm fraction must lie in [0, 1]."""


class ZeroMatrix(SketchLsqError, ValueError):
    """The matrix is identically zero where a nonzero one is required."""


class FrobeniusTooSmall(SketchLsqError, ValueError):
    """Squared Frobenius norm below 1/24, violating the sample-size bound's hypothesis."""


class SpectralNormTooLarge(SketchLsqError, ValueError):
    """Spectral norm exceeds 1 where the sample-size bound requires ||A||_2 <= 1."""


class InvalidSpec(SketchLsqError, ValueError):
    """A problem or sketch specification fails validation."""


class ConfigError(SketchLsqError, ValueError):
    """A benchmark config file is malformed; message carries field context."""


class ParseError(SketchLsqError, ValueError):
    """A matrix CSV cell failed to parse; carries 1-based (row, col)."""

    def __init__(self, row: int, col: int, message: str):
        super().__init__(f"row {row}, col {col}: {message}")
        self.row = row
        self.col = col


class RaggedRows(SketchLsqError, ValueError):
    """A matrix CSV row has a different width than the first row."""

    def __init__(self, row: int, expected: int, got: int):
        super().__init__(f"row {row}: expected {expected} fields, got {got}")
        self.row = row
        self.expected = expected
        self.got = got
