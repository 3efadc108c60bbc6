"""Exception hierarchy shared by all modules."""


class SVIError(Exception):
    """Base class for every error raised by bregsvi."""


class DomainViolation(SVIError, ValueError):
    pass


class DimensionMismatch(SVIError, ValueError):
    pass


class InvalidParameter(SVIError, ValueError):
    pass


class InnerSolverFailure(SVIError, RuntimeError):
    pass


class Infeasible(SVIError, ValueError):
    pass


class Unbounded(SVIError, ValueError):
    pass


class OracleFailure(SVIError, RuntimeError):
    pass


class LineSearchExhausted(SVIError, RuntimeError):
    pass


class DegenerateFit(SVIError, ValueError):
    pass


class IncompatibleConfigs(SVIError, ValueError):
    pass


class ConfigError(SVIError, ValueError):
    pass
