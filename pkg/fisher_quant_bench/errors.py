"""
Error types

Every error carries a short machine-readable `kind` so the CLI can emit a
structured error record and choose an exit code.
"""

from typing import Any, Dict, Optional


class FisherBenchError(ValueError):
    """Base class for all bench errors"""

    kind = "runtime"
    exit_code = 1

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field

    def to_dict(self) -> Dict[str, Any]:
        record = {'kind': self.kind, 'message': str(self)}
        if self.field is not None:
            record['field'] = self.field
        return record


class ParameterOutOfDomainError(FisherBenchError):
    kind = "domain"


class InvalidSampleError(FisherBenchError):
    kind = "sample"


class SingularParameterError(FisherBenchError):
    """theta sits on a boundary where the score is undefined"""

    kind = "singular"


class NumericalIntegrationError(FisherBenchError):
    kind = "integration"


class EmptyBinError(FisherBenchError):
    kind = "empty-bin"


class ExactComputationInfeasibleError(FisherBenchError):
    kind = "infeasible"


class InfeasibleEnumerationError(FisherBenchError):
    kind = "enumeration"


class ProtocolInvalidError(FisherBenchError):
    kind = "protocol"


class InsufficientNodesError(FisherBenchError):
    kind = "insufficient-nodes"


class InsufficientDataError(FisherBenchError):
    kind = "insufficient-data"


class ConfigurationError(FisherBenchError):
    kind = "config"


class ParseError(FisherBenchError):
    kind = "parse"
    exit_code = 2
