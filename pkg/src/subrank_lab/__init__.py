"""Certify, bound and search for the subrank of order-three tensors."""

__version__ = "0.1.0"

from .bounds import bound_report, classify_222, generic_subrank, hyperdeterminant
from .certificates import SubrankCertificate, accepts, verify
from .decomposition import CPDecomposition, jennrich, pair_conjugates
from .search import SearchConfig, als_certificate_search, subrank_estimate
from .tensor import COMPLEX, REAL, Tensor3, mode_transform, unit_tensor

__all__ = [
    "__version__",
    "Tensor3", "REAL", "COMPLEX", "mode_transform", "unit_tensor",
    "SubrankCertificate", "verify", "accepts",
    "CPDecomposition", "jennrich", "pair_conjugates",
    "bound_report", "classify_222", "generic_subrank", "hyperdeterminant",
    "SearchConfig", "als_certificate_search", "subrank_estimate",
]
