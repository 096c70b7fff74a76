"""
Exceptions raised by the pricing models and the solver.
"""


class PeakGridError(Exception):
    pass


class ValidationError(PeakGridError):

    def __init__(self, violations, what='instance'):
        self.violations = list(violations)
        lines = ["{}: {} ({})".format(v.job, v.rule, v.detail) for v in self.violations]
        super(ValidationError, self).__init__("Invalid {}:\n\t".format(what) + "\n\t".join(lines))


class DomainError(PeakGridError, ValueError):
    pass


class ModeError(PeakGridError):
    pass


class InfeasibleJobError(PeakGridError):

    def __init__(self, job_id, message):
        self.job_id = job_id
        super(InfeasibleJobError, self).__init__("Job {}: {}".format(job_id, message))


class BuildError(PeakGridError):
    pass


class ExtractionError(PeakGridError):

    def __init__(self, label, residual):
        self.label = label
        self.residual = residual
        super(ExtractionError, self).__init__(
            "Solution violates tolerance, worst residual {:.3e} at {}".format(residual, label)
        )


class NumericalError(PeakGridError):

    def __init__(self, message, condition=None):
        self.condition = condition
        if condition is not None:
            message = "{} (basis condition estimate {:.3e})".format(message, condition)
        super(NumericalError, self).__init__(message)


class ConfigError(PeakGridError, ValueError):

    def __init__(self, field, message):
        self.field = field
        super(ConfigError, self).__init__("Config field '{}': {}".format(field, message))
