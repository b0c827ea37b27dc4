"""Exception hierarchy shared by every stage of the pipeline.

Each error carries a machine-readable ``code`` and the ``operation`` that
raised it; the CLI maps the class to an exit status.
"""

from __future__ import annotations


class RigidityError(Exception):
    code = "ERROR"
    exit_code = 1

    def __init__(self, message: str, *, operation: str = "", **details):
        super().__init__(message)
        self.operation = operation
        self.details = details

    def record(self) -> dict:
        return {
            "error": self.code,
            "operation": self.operation,
            "message": str(self),
            "details": {k: _jsonable(v) for k, v in sorted(self.details.items())},
        }


def _jsonable(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


class ConfigError(RigidityError):
    code = "CONFIG_ERROR"
    exit_code = 2


class UnsupportedIndex(ConfigError):
    code = "UNSUPPORTED_INDEX"


class BudgetExceeded(RigidityError):
    code = "BUDGET_EXCEEDED"
    exit_code = 3


class BoxTooLarge(BudgetExceeded):
    code = "BOX_TOO_LARGE"


class WindowBudgetExceeded(BudgetExceeded):
    code = "WINDOW_BUDGET_EXCEEDED"


class ScanBudgetExceeded(BudgetExceeded):
    code = "SCAN_BUDGET_EXCEEDED"


class DegreeCapExceeded(BudgetExceeded):
    code = "DEGREE_CAP_EXCEEDED"


class InsufficientBaseTerms(BudgetExceeded):
    code = "INSUFFICIENT_BASE_TERMS"


class PrefixTooShort(BudgetExceeded):
    code = "PREFIX_TOO_SHORT"


class PrecisionExhausted(RigidityError):
    code = "PRECISION_EXHAUSTED"
    exit_code = 4


class DigitCapExceeded(PrecisionExhausted):
    code = "DIGIT_CAP_EXCEEDED"


class ConditionViolated(RigidityError):
    code = "CONDITION_VIOLATED"
    exit_code = 5


class SlackExhausted(ConditionViolated):
    code = "SLACK_EXHAUSTED"


class Degenerate(ConditionViolated):
    code = "DEGENERATE"
