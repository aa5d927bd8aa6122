"""Homogenized electrostatics of lattice charge distributions on thin films.

Microscopic lattice charges on a curved film, their exact potentials, the
per-cell polarization/charge descriptors, and the three homogenized limit
potentials (thin-over-wide, proportional, wide-over-thin), together with
convergence and unit-cell-invariance studies.
"""

from .charge import Modulation, Motif, MotifPoint, Regime, ScaledChargeDistribution, realize, total_charge
from .errors import (
    ConfigError,
    DegenerateFrame,
    EmptyTessellation,
    FilmHomogError,
    NonPositiveJacobian,
    ParseError,
    QuadratureNotConverged,
    RegimeMismatch,
    SingularEvaluation,
    StandoffViolation,
    UnsupportedModulation,
    ValidationError,
)
from .geometry import (
    BoundaryFrame,
    Edge,
    ParametricMap,
    Rectangle,
    SurfaceFrame,
    boundary_frame,
    jacobian_full,
    surface_divergence_term,
    surface_frame,
)
from .lattice import Cell, Tessellation, UnitCellChoice, cell_index, corner_map, tessellate
from .moments import (
    CellMoments,
    MomentFields,
    cell_free_charge,
    cell_polarization,
    moment_fields,
    moment_table,
    moments_to_csv,
    partial_cell_sigma,
    prescribed_fields,
)
from .potential import (
    FieldSample,
    ObservationGrid,
    direct_potential,
    field_to_csv,
    finite_t_double_layer,
    green,
    homogenized_potential_r1,
    homogenized_potential_r2,
    homogenized_potential_r3,
)
from .study import (
    ConvergenceReport,
    GaugeReport,
    check_dipole_decay,
    fit_order,
    make_schedule,
    rebin_motif,
    run_convergence,
    run_gauge,
)

__version__ = "0.1.0"
