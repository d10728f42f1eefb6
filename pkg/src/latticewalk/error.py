"""latticewalk errors."""


class LatticeWalkError(Exception):
    def __init__(
        self,
        message=None,
        line=None,
        path=None
    ):
        super(LatticeWalkError, self).__init__(message)

        self._message = message
        self.line = line
        self.path = path

    def __str__(self):
        msg = self._message or "<empty message>"
        if self.line is not None and self.path is not None:
            return u"{0}, line {1}: {2}".format(self.path, self.line, msg)
        elif self.line is not None:
            return u"line {0}: {1}".format(self.line, msg)
        else:
            return msg

    @property
    def message(self):
        return self._message

    def __repr__(self):
        return "%s(message=%r, line=%r, path=%r)" % (
            self.__class__.__name__,
            self._message,
            self.line,
            self.path,
        )


class ConfigError(LatticeWalkError):
    """Malformed or incomplete run configuration."""


class PatternError(LatticeWalkError):
    """Invalid periodic orientation pattern."""


class EnvironmentVariantError(LatticeWalkError):
    """Operation not supported by the environment variant."""


class TraceError(LatticeWalkError):
    """Trace too short or inconsistent for the requested operation."""


class PathError(LatticeWalkError):
    """Path is not a first-crossing path of the strip."""


class QuadratureError(LatticeWalkError):
    """Adaptive quadrature did not converge."""


class BudgetExceededError(LatticeWalkError):
    """Exact support or estimator budget exhausted."""


class CertificateError(LatticeWalkError):
    """Error loading a defect certificate."""
