"""Numerical D'Atri and k-D'Atri geometry on metric Lie algebras."""

__version__ = "0.1.0"

from .catalog import catalog, load_space, parse_space, resolve_space
from .errors import (
    ConjugatePointError,
    DatriError,
    InvalidInputError,
    JacobiIdentityError,
    MetricError,
    NumericalDegradationWarning,
    SchemaError,
    StepSizeError,
)
from .geoflow import (
    cspace_drift,
    flow_invariant_drift,
    integrate_geodesic,
    iwasawa_limit,
    jacobi_along,
    oracle_defect,
    sphere_shape_operator,
)
from .iwasawa import IwasawaDecomposition, IwasawaReport, validate_iwasawa
from .kdatri import defect_series, gamma_table, kstein_defect, t7_coefficient_identity
from .ledger import closed_form_coefficient, ledger_coefficients, ledger_condition, trace_conditions
from .liealg import (
    MetricLieAlgebra,
    connection,
    curvature,
    curvature_derivative,
    jacobi_operator,
    sectional_curvature,
)
from .symfun import (
    OperatorSeries,
    ScalarSeries,
    SymOp,
    elementary_symmetric,
    newton_from_power_sums,
    power_sums,
    series_product,
    sigma_series,
)
