"""Exception types shared by the numerical kernels, models and CLI."""


class HetdivError(Exception):
    """Base class for all package errors."""


class DomainError(HetdivError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericalError(HetdivError, ArithmeticError):
    """A series, quadrature or differentiation step failed to converge.

    Parameters
    ----------
    message : str
        Human readable description.
    context : dict, optional
        Arguments of the failing evaluation (e.g. hypergeometric parameters,
        tier index, derivative order).
    """

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = dict(context or {})

    def __str__(self):
        base = super().__str__()
        if not self.context:
            return base
        ctx = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
        return f"{base} [{ctx}]"


class UnsupportedConfigurationError(HetdivError, ValueError):
    """The network configuration violates a formula's validity conditions."""


class ConfigError(HetdivError, ValueError):
    """A scenario file could not be parsed or validated.

    Parameters
    ----------
    message : str
        Description of the problem.
    line : int, optional
        1-based line number in the scenario file.
    key : str, optional
        Offending key.
    """

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
