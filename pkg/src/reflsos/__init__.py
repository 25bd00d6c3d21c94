"""Partition function of the elliptic SOS model with one reflecting end.

Three independent routes are provided: a dense operator product
(:func:`partition_oracle`), the factorising-basis operators
(:func:`partition_fbasis`) and a closed determinant formula
(:func:`partition_determinant`).
"""

from .algebra import (build_boundary_monodromy, build_bulk_monodromy, eval_k, eval_r,
                      extract_b_operator, partition_oracle)
from .determinant import (normalized_partition, partition_determinant,
                          partition_trigonometric)
from .elliptic import Nome, eval_h, is_theta_of_order_norm, log_h
from .estimator import PartitionFunction
from .exceptions import (DomainError, GenericityError, InvalidNomeError, NearPoleError,
                         ReflSOSError, ValidationError)
from .fbasis import build_symmetric_b, partition_fbasis
from .model import ModelParams, PartitionResult, load_params, random_params, validate
from .numerics import det_complex, rel_compare

__version__ = "0.1.0"

__all__ = [
    "Nome", "eval_h", "log_h", "is_theta_of_order_norm",
    "ModelParams", "PartitionResult", "random_params", "validate", "load_params",
    "eval_r", "eval_k", "build_bulk_monodromy", "build_boundary_monodromy",
    "extract_b_operator", "partition_oracle",
    "build_symmetric_b", "partition_fbasis",
    "partition_determinant", "partition_trigonometric", "normalized_partition",
    "det_complex", "rel_compare",
    "PartitionFunction",
    "ReflSOSError", "DomainError", "InvalidNomeError", "NearPoleError",
    "ValidationError", "GenericityError",
]
