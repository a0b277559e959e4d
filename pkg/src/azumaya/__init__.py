"""Smooth functional calculus on commuting matrix tuples with real spectrum."""

__version__ = "0.1.0"

from .calculus import AzumayaPoint, annihilation_check, apply, verify_ring_hom
from .division import HermiteSpec, Poly, hermite_interpolant, poly_divide, remainder_equiv_check
from .errors import (
    AzumayaError,
    ClusteringError,
    ConditioningWarning,
    DomainError,
    EigensolverError,
    HypothesisError,
    NumericalError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .expr import Expr, diff, eval_real, parse, taylor_jet, to_string
from .jets import Jet, WeilTuple, jet_arith, split
from .matrixalg import (
    JointSpectrum,
    MatrixTuple,
    char_poly,
    check_commuting,
    joint_decompose,
    nilpotency,
    real_spectrum_check,
)
from .spectral import GridSpec, MatrixFamily, family_apply, sample_family, wall_detect
from .weil import eval_on_weil
