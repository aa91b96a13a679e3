"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class NesskitError(Exception):
    exit_code = 1
    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self), "exit_code": self.exit_code}


class ConfigError(NesskitError, ValueError):
    """Malformed input: bad shapes, missing keys, invalid physical parameters."""

    exit_code = 2
    kind = "config"

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

    def to_dict(self):
        d = super().to_dict()
        d["errors"] = self.errors
        return d


class PhysicsError(NesskitError):
    """A physical precondition failed (degenerate kernel, vanishing golden-rule rates, ...)."""

    exit_code = 3
    kind = "physics"


class DegenerateKernelError(PhysicsError):
    kind = "degenerate_kernel"

    def __init__(self, message, eigenvalues=()):
        self.eigenvalues = list(eigenvalues)
        super().__init__(message)

    def to_dict(self):
        d = super().to_dict()
        d["eigenvalues"] = [[complex(z).real, complex(z).imag] for z in self.eigenvalues]
        return d


class PerronFrobeniusError(PhysicsError):
    kind = "perron_frobenius_violation"


class DegenerateBohrFrequencyError(PhysicsError):
    kind = "degenerate_bohr_frequency"


class OutsideDomainError(PhysicsError):
    """The complement block of a Feshbach map is not invertible."""

    kind = "outside_domain"

    def __init__(self, message, singular_value=None):
        self.singular_value = singular_value
        super().__init__(message)


class NumericalError(NesskitError):
    """Quadrature failed to converge or a solve was too ill-conditioned to trust."""

    exit_code = 4
    kind = "numerical"


class IntegrabilityError(PhysicsError):
    """A weighted norm integral diverges at the origin."""

    kind = "integrability"
