"""Discrete Lagrangian field theory with values in Lie groupoids."""

__version__ = "0.1.0"

from .errors import (
    BaseMismatch,
    BoundaryVertexError,
    ConfigError,
    CycleDefect,
    DegenerateLegendre,
    DimensionTooSmall,
    FieldError,
    GroupoidFieldError,
    MeshError,
    NonConvergence,
    NotASolution,
    NotComposable,
    NotInvariant,
    OutsideInjectivityRadius,
    SingularElement,
    SingularJacobian,
    SolverError,
)
from .field import (
    DiscreteField,
    InfinitesimalVariation,
    apply_variation,
    constant_field,
    extend_to_morphism,
    field_from_potentials,
    jet_of,
    potentials_of,
    random_field,
    validate_field,
)
from .gauge import (
    GaugeField,
    PathInComplex,
    elementary_moves,
    field_strength,
    gauge_from_field,
    holonomy,
    is_flat,
    make_gauge_field,
    perturb_edge,
)
from .groupoid import (
    GL,
    SO3,
    AlgebroidCovector,
    AlgebroidVector,
    EuclideanSpace,
    LieGroupGroupoid,
    PairGroupoid,
    Tolerances,
    log_group,
    pairing,
    parse_groupoid,
)
from .jet import (
    JetElement,
    directional_derivative,
    invert_jet,
    make_jet,
    source_map,
    tangent_lift_derivative,
    vary_jet,
)
from .lagrangian import (
    Lagrangian,
    PCFormValue,
    action_sum,
    legendre,
    make_lagrangian,
    pair_lagrangian,
    pc_form,
    register_lagrangian,
)
from .mesh import MeshTopology, build_square_mesh, build_triangular_mesh, mesh_from_dict
from .solver import (
    EulerLagrangeOperator,
    SolveReport,
    VertexResidual,
    lie_poisson_residual,
    multisymplectic_defect,
    reduce_lagrangian,
    residual_at,
    solve_boundary_value,
    solve_time_march,
)
