"""
Exception hierarchy for rdelab.

Input mistakes derive from InvalidInputError (also a ValueError) and map
to CLI exit code 1. Analysis outcomes derive from AnalysisOutcome and are
recorded in reports rather than surfaced as crashes.
"""


class RDELabError(Exception):
    """Base class for every error raised by rdelab."""


class InvalidInputError(RDELabError, ValueError):
    """The caller supplied parameters outside the documented domain."""


class AnalysisOutcome(RDELabError):
    """An analysis could not reach a conclusion; carried as evidence."""


class SinkError(RDELabError):
    """Output could not be written to the requested sink."""


# core-dynamics


class NonPositiveA(InvalidInputError):
    def __init__(self, A: float):
        super().__init__(f"A must be a positive real, got {A!r}")
        self.A = A


class DelayLessThanOne(InvalidInputError):
    def __init__(self, m: int):
        super().__init__(f"delay m must be an integer >= 1, got {m!r}")
        self.m = m


class NonPositiveInitial(InvalidInputError):
    def __init__(self, component: str, index: int, value: float):
        super().__init__(
            f"initial value {component}[{index}] must be positive, got {value!r}"
        )
        self.component = component
        self.index = index
        self.value = value


class WrongBlockLength(InvalidInputError):
    def __init__(self, component: str, expected: int, actual: int):
        super().__init__(
            f"initial list for {component} needs {expected} entries, got {actual}"
        )
        self.component = component
        self.expected = expected
        self.actual = actual


# equilibria


class AEqualsOne(InvalidInputError):
    def __init__(self) -> None:
        super().__init__(
            "A = 1 has a one-parameter family of equilibria; use family_equilibrium(mu)"
        )


class MuOutOfRange(InvalidInputError):
    def __init__(self, mu: float):
        super().__init__(f"family parameter mu must exceed 1, got {mu!r}")
        self.mu = mu


class NotUnityA(InvalidInputError):
    def __init__(self, A: float):
        super().__init__(f"mu estimation needs A = 1, got A = {A!r}")
        self.A = A


class OverflowedTrajectory(InvalidInputError):
    def __init__(self, overflow_at: int):
        super().__init__(f"trajectory overflowed at n = {overflow_at}")
        self.overflow_at = overflow_at


# linearize


class EpsilonOutOfRange(InvalidInputError):
    def __init__(self, epsilon: float, m: int):
        super().__init__(f"epsilon must lie in (0, 1/{m}), got {epsilon!r}")
        self.epsilon = epsilon
        self.m = m


class UnsupportedRegime(InvalidInputError):
    def __init__(self, A: float):
        super().__init__(f"no scaling certificate is available for 0 < A < 1 (A = {A!r})")
        self.A = A


class NoConvergence(AnalysisOutcome):
    def __init__(self, max_iter: int, estimate: float):
        super().__init__(
            f"power iteration did not settle within {max_iter} iterations "
            f"(last estimate {estimate!r})"
        )
        self.max_iter = max_iter
        self.estimate = estimate


# analyze


class AOutOfRange(InvalidInputError):
    def __init__(self, A: float, expected: str = "(0, 1)"):
        super().__init__(f"A must lie in {expected}, got {A!r}")
        self.A = A


class WindowTooLarge(InvalidInputError):
    def __init__(self, window: int, length: int):
        super().__init__(
            f"window {window} needs at least {2 * window} samples, series has {length}"
        )
        self.window = window
        self.length = length


class DegenerateEnvelope(AnalysisOutcome):
    def __init__(self, M: float, A: float):
        super().__init__(f"envelope constant M = {M!r} does not exceed A = {A!r}")
        self.M = M
        self.A = A


class NoDivergenceDetected(AnalysisOutcome):
    def __init__(self, reason: str):
        super().__init__(f"no diverging parity subsequence: {reason}")
        self.reason = reason


# sweep / cli-io


class InvalidGrid(InvalidInputError):
    pass


class ParseError(InvalidInputError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class IncompleteInitialBlock(InvalidInputError):
    pass


class ConflictingInitSources(InvalidInputError):
    def __init__(self) -> None:
        super().__init__(
            "explicit initial values and seed/init_range are mutually exclusive"
        )
