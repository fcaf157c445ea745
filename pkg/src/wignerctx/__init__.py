"""Phase-space tools for continuous-variable systems: Wigner functions, quadrature
measurement statistics, noncontextual hidden-variable models and a compiler from
quadrature expressions to homodyne circuits."""

from .errors import (
    ConvergenceError,
    CoverageError,
    DimensionError,
    NegativeWignerError,
    ParseError,
    PhysicalityError,
    TruncationError,
    UnsupportedError,
    WignerCtxError,
)
from .hvm import Contextual, HiddenVariableModel, Noncontextual, build_hvm, empirical_from_hvm, round_trip, verdict
from .measurement import (
    BinnedPdf,
    QuadratureLabel,
    born_quadrature_pdf_oracle,
    context_distribution,
    displacement_pvm_distribution,
    quadrature_pdf,
)
from .phase_space import LagrangianSubspace, SymplecticMap, omega_matrix, symplectic_form
from .qcompile import CircuitPlan, Homodyne, compile_measurement, heisenberg_verify, parse_quadrature_expr, simulate_homodyne
from .states import (
    CZ,
    Disp,
    FockDensityMatrix,
    GaussianState,
    Rot,
    coherent,
    make_cat,
    make_fock,
    make_gaussian,
    squeezed_vacuum,
    tensor,
    thermal,
    two_mode_squeezed_vacuum,
    vacuum,
)
from .wigner import GridSpec, WignerGrid, characteristic_function, negativity_report, standard_grid, wigner_grid, wigner_point

__version__ = "0.1.0"
