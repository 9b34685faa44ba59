"""Exception hierarchy shared by the computational modules, the CLI and the routers."""


class WeylExitError(Exception):

    """Base class for every diagnostic raised by this package."""


class InvalidInputError(WeylExitError, ValueError):

    """A vector, time or option is malformed (x outside W, nonpositive t, shape mismatch)."""


class CapabilityError(WeylExitError):

    """A method was asked for something outside its documented range (dimension, rare events)."""


class StructuralError(WeylExitError):

    """Inputs are individually valid but mutually inconsistent, or an integral has no decaying direction."""


class QuadratureError(WeylExitError):

    """The integrand produced NaN or overflow; the message names the offending point."""


class NotConvergedError(WeylExitError):

    """A fit did not show the residual decay expected in the asymptotic regime."""
