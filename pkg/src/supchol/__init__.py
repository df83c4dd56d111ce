"""Supernodal sparse Cholesky factorization with right-looking (RL) and
right-looking blocked (RLB) numeric drivers, supernode merging, partition
refinement and a simulated host/device offload layer."""

from .errors import (
    DeviceMemoryExceeded,
    DimensionError,
    NotPositiveDefinite,
    ParseError,
    SingularBlock,
    SingularFactor,
    SupcholError,
    UnsupportedFormat,
    ValidationError,
)
from .matrix import Permutation, SymmetricSparseMatrix, permute_symmetric, read_matrix_market, write_matrix_market
from .pipeline import Analysis, Factorization, analyze, factorize, solve

__all__ = [
    "SymmetricSparseMatrix",
    "Permutation",
    "permute_symmetric",
    "read_matrix_market",
    "write_matrix_market",
    "Analysis",
    "Factorization",
    "analyze",
    "factorize",
    "solve",
    "SupcholError",
    "ParseError",
    "UnsupportedFormat",
    "DimensionError",
    "ValidationError",
    "NotPositiveDefinite",
    "SingularBlock",
    "SingularFactor",
    "DeviceMemoryExceeded",
]
