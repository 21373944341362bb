"""Exception types shared across the package."""


class ChannelClosedError(ValueError):
    """An energetically forbidden scattering channel.

    Raised by kinematics routines when the incoming kinetic energy is
    insufficient to open the requested transition. Catch it to treat the
    channel as absent; channel-assembly code does exactly that and folds
    closed channels in as zero contributions.
    """


class NumericFailure(RuntimeError):
    """A numerical routine failed to reach its accuracy contract.

    Examples: quadrature not converging within the allowed refinements,
    integrator step-size underflow, or an evolved state violating the
    trace/Hermiticity/positivity tolerances.
    """


class ConfigError(ValueError):
    """A scenario configuration file is missing keys or inconsistent."""
