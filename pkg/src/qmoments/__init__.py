"""qmoments: exact moments of quadratic twists of the Mobius function and
a verification workbench for every constant and main term they predict."""

from .errors import ResourceLimitError, UnsupportedError
from .sieves import SieveTables, build_sieve, kronecker, squarefree_kernel
from .characters import CharSumResult, char_sum_T, char_vector
from .moments import MomentResult, inner_sum, moment, moment_via_rearrangement
from .diagonal import DiagonalSum, d2_sum, d3_sum, dk_sum_generic, f_value
from .euler import EulerConstant, TruncatedSeries, euler_constant
from .asymptotics import (
    PairFormMatrix,
    PolytopeEstimate,
    build_pair_matrix,
    estimate_I,
    perron_residual_fit,
    polytope_volume,
    predict_main_term,
)

__version__ = "0.1.0"

__all__ = [
    "ResourceLimitError",
    "UnsupportedError",
    "SieveTables",
    "build_sieve",
    "kronecker",
    "squarefree_kernel",
    "CharSumResult",
    "char_sum_T",
    "char_vector",
    "MomentResult",
    "inner_sum",
    "moment",
    "moment_via_rearrangement",
    "DiagonalSum",
    "d2_sum",
    "d3_sum",
    "dk_sum_generic",
    "f_value",
    "EulerConstant",
    "TruncatedSeries",
    "euler_constant",
    "PairFormMatrix",
    "PolytopeEstimate",
    "build_pair_matrix",
    "estimate_I",
    "perron_residual_fit",
    "polytope_volume",
    "predict_main_term",
    "__version__",
]
