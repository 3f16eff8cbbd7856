# services/atlas/app/core/exceptions.py
"""
错误层级与退出码 (error hierarchy and CLI exit codes)

0 pass / 1 check or experiment failure / 2 usage or input error / 3 numerical non-convergence
"""

from __future__ import annotations

from typing import Any

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class AtlasError(Exception):
    exit_code: int = EXIT_FAILURE

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        return {"error": self.__class__.__name__, "message": self.message, "details": self.details}


# -------------------------------------------------------------------------
# 1. 输入 / 用法错误 (exit 2)
# -------------------------------------------------------------------------
class UsageError(AtlasError):
    exit_code = EXIT_USAGE


class ParseError(UsageError):
    def __init__(self, message: str, *, line: int | None = None, **details: Any):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message, line=line, **details)
        self.line = line


class NetworkError(UsageError):
    """Invalid rotation-system input."""


class NotConnected(NetworkError):
    pass


class BadInvolution(NetworkError):
    pass


class NonPositiveConductance(NetworkError):
    pass


class RootAbsorbing(NetworkError):
    pass


class NoAbsorbingSet(NetworkError):
    pass


class NotPlanar(NetworkError):
    pass


class NotTriangulation(NetworkError):
    pass


class SizeCap(UsageError):
    pass


class Overlap(UsageError):
    pass


class EmptyTarget(UsageError):
    pass


class InfiniteConductance(UsageError):
    pass


class StartAbsorbing(UsageError):
    pass


class WalkTooShort(UsageError):
    pass


# -------------------------------------------------------------------------
# 2. 数值错误 (exit 3)
# -------------------------------------------------------------------------
class NumericalError(AtlasError):
    exit_code = EXIT_NUMERICAL


class NonConvergence(NumericalError):
    def __init__(self, message: str = "", *, residual: float | None = None, **details: Any):
        super().__init__(message, residual=residual, **details)
        self.residual = residual


class InconsistentFlow(NumericalError):
    pass


class ZeroEta(NumericalError):
    pass


class LayoutInconsistency(NumericalError):
    pass


class StepCap(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class DegenerateCrossing(NumericalError):
    pass


class TangentSegment(NumericalError):
    pass


# -------------------------------------------------------------------------
# 3. 检查失败 (exit 1)
# -------------------------------------------------------------------------
class CheckFailed(AtlasError):
    exit_code = EXIT_FAILURE


class NoAnchor(CheckFailed):
    pass


class OrderMismatch(CheckFailed):
    def __init__(self, message: str = "", *, triple: tuple[int, int, int] | None = None, **details):
        super().__init__(message, triple=triple, **details)
        self.triple = triple


def exit_code_for(exc: BaseException) -> int:
    """把任意异常映射到 CLI 退出码。"""
    if isinstance(exc, AtlasError):
        return exc.exit_code
    if isinstance(exc, SystemExit):
        return int(exc.code or 0)
    return EXIT_FAILURE
