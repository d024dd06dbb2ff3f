"""Exception types raised across the package."""


class CoupledLDPCError(Exception):
    """Base class for all domain errors."""


class InvalidParametersError(CoupledLDPCError, ValueError):
    pass


class DimensionMismatchError(CoupledLDPCError, ValueError):
    pass


class InvalidPrecodeError(CoupledLDPCError, ValueError):
    """Precode block is malformed or leaves a punctured stopping set."""


class LiftingInfeasibleError(CoupledLDPCError, ValueError):
    pass


class SamplingError(CoupledLDPCError, RuntimeError):
    """Graph sampling ran out of sockets or exceeded its retry budget."""
