"""Transfer-matrix scattering for complex potentials in 2D and 3D.

Computes scattering amplitudes through the operator-valued transfer
matrix on the propagating momentum window, and constructs and verifies
potential families with identical scattering below a critical wavenumber
(alpha-equivalence) or none at all (invisibility).
"""

__version__ = "0.1.0"

SCHEMA_VERSION = "1"

from .errors import (
    CombRequiresLattice,
    DimensionMismatch,
    DistributionalVariant,
    GrazingIncidence,
    GridMismatch,
    NoConvergence,
    SingularOperator,
    UnsupportedFamily,
    XferscatError,
)
from .potentials import (
    DeltaComb,
    Gaussian3D,
    GaussianBump,
    GaussianProfile,
    Potential2D,
    Potential3D,
    RationalDeformation2D,
    RationalDeformation3D,
    Sum2D,
    Sum3D,
    SupportReport,
    Tabulated2D,
    ZERO_2D,
    ZERO_3D,
    add_potentials,
    check_onesided_support,
    construct_deformation_2d,
    construct_deformation_3d,
    deformation_amplitude_3d,
    difference,
    eval_position,
    eval_position_3d,
    fourier_xy,
    fourier_y,
    from_json,
    full_fourier_2d,
    scale_potential,
    support_x,
    support_z,
    to_json,
)
from .grids import (
    CombLattice,
    DiskGrid3D,
    MomentumGrid2D,
    build_disk_grid,
    build_grid_2d,
    build_lattice,
)
from .operators import BlockOperator, OperatorRep, op_add, op_compose, op_solve, op_solve_delta
from .config import EngineOptions
from .dynamics2d import (
    TransferMatrix2D,
    TransferMatrixComb,
    delta_transfer_matrix,
    hamiltonian,
    potential_operator,
    transfer_matrix,
)
from .dynamics3d import (
    EqualityReport,
    TransferMatrix3D,
    hamiltonian_3d,
    hamiltonian_equality_check,
    potential_operator_3d,
    transfer_matrix_3d,
)
from .amplitudes2d import (
    AmplitudeTable,
    OrderTable,
    ScatteringTask,
    amplitude,
    default_theta_grid,
    diffraction_orders,
    flux_balance,
    solve_amplitude,
    t_coefficients,
)
from .born import born_2d, born_3d, fourier_3d
from .equivalence import (
    EquivalenceReport,
    comb_alpha_n,
    run_comb_truncation,
    run_equivalence,
    run_equivalence_3d,
    run_invisibility,
    truncate_comb,
)
