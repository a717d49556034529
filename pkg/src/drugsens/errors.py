"""Exception types raised across the toolkit.

Every failure mode that callers are expected to handle has its own class so
that CLI and HTTP layers can map them to stable error codes.
"""


class DrugSensError(Exception):
    """Base class for all toolkit errors."""


# --- dataset ingestion / encoding ---

class MissingColumn(DrugSensError):
    def __init__(self, name: str):
        super().__init__(f"required column not found in header: {name!r}")
        self.name = name


class MalformedRow(DrugSensError):
    def __init__(self, line_no: int, detail: str = ""):
        msg = f"malformed row at line {line_no}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line_no = line_no


class AllRowsDropped(DrugSensError):
    pass


class EmptyInput(DrugSensError):
    pass


class SchemaMismatch(DrugSensError):
    pass


class TooFewRows(DrugSensError):
    pass


# --- model fitting / prediction ---

class InvalidHyperParams(DrugSensError):
    pass


class InvalidParams(DrugSensError):
    pass


class DimensionMismatch(DrugSensError):
    pass


class SingularSystem(DrugSensError):
    pass


# --- evaluation ---

class LengthMismatch(DrugSensError):
    pass


class ZeroVarianceTarget(DrugSensError):
    pass


class EmptySpace(DrugSensError):
    pass


# --- explanation ---

class TooManyFeatures(DrugSensError):
    pass


class MisalignedFeatures(DrugSensError):
    pass


# --- clinical reporting / LLM client ---

class NonFiniteInput(DrugSensError):
    pass


class IncompleteReport(DrugSensError):
    pass


class LlmClientError(DrugSensError):
    """Base class for chat-completion client failures."""


class AuthError(LlmClientError):
    pass


class RateLimited(LlmClientError):
    pass


class ServerError(LlmClientError):
    pass


class MalformedResponse(LlmClientError):
    pass


# --- persistence ---

class UnsupportedVersion(DrugSensError):
    pass


class CorruptFile(DrugSensError):
    pass
