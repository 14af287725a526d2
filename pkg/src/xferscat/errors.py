"""Exception types shared across the engine."""


class XferscatError(Exception):
    """Base class for all engine errors."""


class DistributionalVariant(XferscatError):
    """Pointwise evaluation requested for a delta-type potential."""


class CombRequiresLattice(XferscatError):
    """Delta-comb potentials are only handled by the lattice backend."""


class DimensionMismatch(XferscatError):
    """Mixed 2D/3D potentials in one operation."""


class UnsupportedFamily(XferscatError):
    """Operation not available for this potential family."""


class GridMismatch(XferscatError):
    """Operands live on different grids."""


class SingularOperator(XferscatError):
    """Discretized operator is numerically non-invertible (condition > 1e12)."""


class NoConvergence(XferscatError):
    """Slice refinement failed to reach tolerance within the doubling budget."""


class GrazingIncidence(XferscatError):
    """Incidence angle too close to +-pi/2: longitudinal wavenumber degenerates."""
