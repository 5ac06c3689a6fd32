"""Exception hierarchy for uaplab.

Every structured error carries enough state to diagnose the failure
programmatically (offending point, measured values, violated field) so the
CLI can serialize it into machine-readable error JSON.
"""

from __future__ import annotations


class UaplabError(Exception):
    """Base class for all library errors."""

    def payload(self) -> dict:
        """JSON-serializable description of the failure."""
        return {"error": type(self).__name__, "message": str(self)}


class DimensionMismatchError(UaplabError):
    pass


class NonFiniteValueError(UaplabError):
    """A sampled function value was nan/inf at a concrete point."""

    def __init__(self, point, value, context: str = ""):
        self.point = point
        self.value = value
        super().__init__(
            f"non-finite value {value!r} at point {point!r}"
            + (f" while {context}" if context else "")
        )


class QuadratureError(UaplabError):
    pass


class PreconditionError(UaplabError):
    """An operation's documented precondition was violated."""


class InconclusiveError(UaplabError):
    """Sign analysis could not be resolved at tolerance on an interval."""

    def __init__(self, interval, message: str = ""):
        self.interval = tuple(interval)
        super().__init__(
            message or f"unresolved sign of sigma(x)-x on interval {self.interval}"
        )


class RangeError(UaplabError):
    """Requested value lies outside the range of an injective map."""


class FitSingularError(UaplabError):
    """Normal equations were singular; retry with ridge > 0."""


class FitBudgetError(UaplabError):
    """A fit could not reach the requested residual."""

    def __init__(self, residual: float, budget: float, message: str = ""):
        self.residual = residual
        self.budget = budget
        super().__init__(
            message
            or f"fit residual {residual:.3e} exceeds budget {budget:.3e}"
        )


class NoEscapeError(UaplabError):
    """The iterated map never cleared the guard cube within max_N steps."""

    def __init__(self, max_n: int):
        self.max_n = max_n
        super().__init__(f"no escape within {max_n} iterations")


class VerificationError(UaplabError):
    """A constructed object failed its measured-tolerance check."""

    def __init__(self, message: str, measured: dict | None = None):
        self.measured = dict(measured or {})
        super().__init__(message)

    def payload(self) -> dict:
        out = super().payload()
        out["measured"] = self.measured
        return out


class DivergenceError(UaplabError):
    """A running supremum kept growing without stabilizing."""


class NoControllingWeightError(UaplabError):
    """No weight in the family controls the function's growth."""

    def __init__(self, flags: dict):
        self.flags = dict(flags)
        super().__init__(
            "no weight in the family controls the target's growth: "
            + ", ".join(f"{k}: {v}" for k, v in flags.items())
        )


class ConstraintViolationError(UaplabError):
    """A constraint functional exceeded its threshold."""

    def __init__(self, label: str, value: float, threshold: float, stage: str):
        self.label = label
        self.value = value
        self.threshold = threshold
        self.stage = stage
        super().__init__(
            f"constraint {label!r} violated at {stage}: {value:.6g} >= {threshold:.6g}"
        )


class ConfigError(UaplabError):
    """Invalid experiment configuration; lists every violated field."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    def payload(self) -> dict:
        out = super().payload()
        out["violations"] = self.violations
        return out
