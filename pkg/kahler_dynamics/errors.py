"""Error hierarchy with stable machine-readable codes.

Every failure a computation can signal is a ``DynamicsError`` subclass whose
``code`` is the identifier written into error records. Non-fatal conditions
are warning categories and never interrupt a run.
"""


class DynamicsError(Exception):
    code = 'DynamicsError'

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_record(self):
        record = {'code': self.code, 'message': self.message}
        details = {key: str(value) for key, value in sorted(self.details.items()) if value is not None}
        if details:
            record['details'] = details
        return {'error': record}


class NotInvertible(DynamicsError):
    code = 'NotInvertible'


class Overflow(DynamicsError):
    code = 'Overflow'


class ThetaNotResolved(DynamicsError):
    code = 'ThetaNotResolved'


class ConeNotPreserved(DynamicsError):
    code = 'ConeNotPreserved'


class NotUnitDeterminant(DynamicsError):
    code = 'NotUnitDeterminant'


class EmptyWord(DynamicsError):
    code = 'EmptyWord'


class DimensionMismatch(DynamicsError):
    code = 'DimensionMismatch'


class CupIncompatible(DynamicsError):
    code = 'CupIncompatible'


class CupMissing(DynamicsError):
    code = 'CupMissing'


class NotEigenclass(DynamicsError):
    code = 'NotEigenclass'


class HypothesisViolated(DynamicsError):
    code = 'HypothesisViolated'


class DegenerateFunction(DynamicsError):
    code = 'DegenerateFunction'


class NoExpansion(DynamicsError):
    code = 'NoExpansion'


class ZeroFrequency(DynamicsError):
    code = 'ZeroFrequency'


class ParseError(DynamicsError):
    code = 'ParseError'

    def __init__(self, message, line=None, column=None):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column


class ConfigValidationError(DynamicsError):
    code = 'ValidationError'

    def __init__(self, message, field=None):
        super().__init__(message, field=field)
        self.field = field


class ModelInconsistencyWarning(UserWarning):
    pass


class AliasWarning(UserWarning):
    pass


class DegenerateFunctionWarning(UserWarning):
    pass
