"""Exception types raised across the package."""


class PathviscError(Exception):
    """Base class for all package errors."""


class DriftExceeded(PathviscError):
    """Hamiltonian drift along an integrated trajectory exceeded its budget."""

    def __init__(self, drift, budget):
        self.drift = drift
        self.budget = budget
        super().__init__(f"hamiltonian drift {drift:.3e} exceeds budget {budget:.3e}")


class NoConvergence(PathviscError):
    """Newton shooting failed; the pair is likely outside the injectivity radius."""

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"shooting did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


class SingularTangent(PathviscError):
    """The end-point Jacobian alpha_1 is numerically singular."""


class HorizonMismatch(PathviscError):
    """Two signals do not both cover the requested horizon."""


class ThetaTildeInfinite(PathviscError):
    """sup_r (omega(r) - gamma r / 2) is infinite for an uncapped modulus."""


class DenominatorVanishing(PathviscError):
    """1 - lambda * (weighted signal gap) is not positive."""


class BreakpointTime(PathviscError):
    """The signal derivative is undefined at a breakpoint."""


class EmptyWindow(PathviscError):
    """No admissible lambda exists for the given gamma and signals."""


class SmallnessViolated(PathviscError):
    """The smallness condition relating signal gaps and the injectivity radius fails."""

    def __init__(self, lhs, rhs, detail=""):
        self.lhs = lhs
        self.rhs = rhs
        msg = f"smallness condition violated: {lhs:.6g} >= {rhs:.6g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class EmptyGamma(PathviscError):
    """No gamma on the grid satisfies the admissibility conditions."""


class CFLFailure(PathviscError):
    """Explicit substepping would exceed the substep cap."""


class ConfigError(PathviscError):
    """Malformed experiment configuration."""

    def __init__(self, message, section=None, field=None, line=None):
        self.section = section
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if section is not None:
            where.append(f"[{section}]")
        if field is not None:
            where.append(field)
        prefix = " ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
