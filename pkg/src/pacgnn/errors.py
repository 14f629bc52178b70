class PacGnnError(Exception):
    pass


class NonConvergence(PacGnnError):
    pass


class SvdFailure(PacGnnError):
    pass


class InvalidParams(PacGnnError, ValueError):
    pass


class ShapeMismatch(PacGnnError, ValueError):
    pass


class LabelOutOfRange(PacGnnError, ValueError):
    pass


class DegenerateWeight(PacGnnError, ValueError):
    pass


class Divergence(PacGnnError):
    pass


class ParseError(PacGnnError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AssumptionViolation(PacGnnError):
    def __init__(self, message, sample=None):
        self.sample = sample
        super().__init__(message)
