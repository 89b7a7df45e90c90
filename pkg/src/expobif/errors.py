"""Exception hierarchy shared by the core modules, the service and the CLI."""


class ExpobifError(Exception):
    """Base class. ``code`` is a stable machine-readable identifier."""

    code = "error"
    exit_code = 3

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        return obj
    return str(obj)


class ValidationError(ExpobifError):
    code = "validation"
    exit_code = 2


class AddressParseError(ValidationError):
    code = "parse_error"

    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}", position=position, text=text)
        self.position = position


# -- combinatorics --------------------------------------------------------

class ShiftOfTop(ExpobifError):
    code = "shift_of_top"
    exit_code = 2


class UnsupportedBase(ExpobifError):
    code = "unsupported_base"
    exit_code = 2


class NotFound(ExpobifError):
    code = "characteristic_not_found"


class NotUnique(ExpobifError):
    code = "characteristic_not_unique"


class BoundaryEntry(ExpobifError):
    code = "boundary_entry"


# -- dynamics ---------------------------------------------------------------

class StripBoundary(ExpobifError):
    code = "strip_boundary"

    def __init__(self, k: int, value: float):
        super().__init__(f"iterate {k} lies on a strip boundary (im={value!r})", k=k, value=value)
        self.k = k


class BranchCollision(ExpobifError):
    code = "branch_collision"


class PotentialTooLow(ExpobifError):
    code = "potential_too_low"
    exit_code = 2


class NoConvergence(ExpobifError):
    code = "no_convergence"


class WrongExactPeriod(ExpobifError):
    code = "wrong_exact_period"

    def __init__(self, divisor: int, period: int):
        super().__init__(f"orbit has exact period {divisor}, not {period}", divisor=divisor, period=period)
        self.divisor = divisor


class Overflow(ExpobifError):
    code = "overflow"


# -- parameter space ----------------------------------------------------------

class HomotopyStall(ExpobifError):
    code = "homotopy_stall"


class AddressMismatch(ExpobifError):
    code = "address_mismatch"


class NotReadable(ExpobifError):
    code = "not_readable"


class SolverDivergence(ExpobifError):
    code = "solver_divergence"


class CertificateFailure(ExpobifError):
    code = "certificate_failure"


class ContinuationBreakdown(ExpobifError):
    code = "continuation_breakdown"


class PerturbationFailed(ExpobifError):
    code = "perturbation_failed"


class WakeViolation(ExpobifError):
    code = "wake_violation"


class HypothesisFailed(ExpobifError):
    code = "hypothesis_failed"
    exit_code = 2
