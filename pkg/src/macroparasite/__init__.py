"""Equilibrium parasite-load distributions in host-macroparasite models with
clumped infections: closed-form aggregation indices, PGF inversion,
compound-Poisson decompositions, stochastic-order checks and a Monte Carlo
oracle."""

from .clump import (
    ClumpDistribution,
    Degenerate,
    FiniteSupport,
    Geometric,
    GeometricMixture,
    LogShape,
    LogShapeKind,
    NegativeBinomial,
    Poisson,
    classify_log_shape,
    clump_from_spec,
)
from .compound import ComponentSystem, build_system, component_pgf, component_pmf, decompose, reconstruct_pgf, weight
from .errors import (
    ConsistencyError,
    InvalidParameters,
    InversionError,
    MacroparasiteError,
    NoComponentError,
    QuadratureError,
)
from .inversion import PgfEvaluator, choose_k_max, invert
from .model import (
    AggregationReport,
    ModelParams,
    cv,
    equilibrium_pgf,
    equilibrium_pmf,
    moments,
    prevalence_complement,
    report,
    transient_pgf,
    vmr,
)
from .orders import (
    LorenzCurve,
    OrderVerdict,
    Relation,
    convex_order_check,
    gini,
    lorenz_curve,
    lorenz_order_check,
    pietra,
    survival_crossing_check,
)
from .pmf import Pmf

__version__ = "0.1.0"
