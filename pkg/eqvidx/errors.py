"""
Exception hierarchy shared by every stage of the index pipeline.

Each error may carry a ``stage`` tag (set by index_reports when a stage fails) and an
``exit_code`` used by the command line entry point.
"""


class EqvidxError(Exception):
    exit_code = 2

    def __init__(self, message='', stage=None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        return f'[{self.stage}] {msg}' if self.stage else msg


class DomainError(EqvidxError, ValueError):
    pass


class UndefinedPointError(EqvidxError, ValueError):
    pass


class SingularityError(EqvidxError):
    exit_code = 3


class BudgetExceededError(EqvidxError):
    exit_code = 3


class NotFoundError(EqvidxError):
    exit_code = 3

    def __init__(self, message='', scan=None, stage=None):
        """
        :param scan: (list of dict) classification of every scanned launch parameter
        """
        super().__init__(message, stage=stage)
        self.scan = scan if scan is not None else []


class InternalConsistencyError(EqvidxError):
    pass


class PreconditionError(EqvidxError, ValueError):
    exit_code = 4


class InvalidBCError(EqvidxError, ValueError):
    pass


class MeshError(EqvidxError):
    pass


class AmbiguityError(EqvidxError):
    pass


class OperatorMismatchError(EqvidxError, ValueError):
    pass


class DegenerateFunctionError(EqvidxError, ValueError):
    pass


class UsageError(EqvidxError):
    exit_code = 4


EXIT_OK = 0
EXIT_VERIFICATION = 2
EXIT_BUDGET = 3
EXIT_USAGE = 4
