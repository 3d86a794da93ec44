"""Conic relaxations of the soft-margin HSVM and solution recovery."""

from ..manifold import jacobian_exp0
from .basis import MonomialBasis, TMSIndex, basis_size, monomials
from .extract import (
    ExtractionCandidate,
    ExtractionError,
    InfeasibleRelaxation,
    extract_moment,
    extract_sdp,
    flat_extension_check,
    p_star,
    sdp_candidates,
)
from .moment import (
    MomentBlock,
    SparsityPlan,
    assemble_dense_moment,
    assemble_sparse_moment,
    ball_radius,
)
from .sdp import AssemblyError, SdpLayout, assemble_robust_sdp, assemble_sdp

__all__ = [
    "AssemblyError", "ExtractionCandidate", "ExtractionError", "InfeasibleRelaxation",
    "MomentBlock", "MonomialBasis", "SdpLayout", "SparsityPlan", "TMSIndex",
    "assemble_dense_moment", "assemble_robust_sdp", "ball_radius", "assemble_sdp", "assemble_sparse_moment",
    "basis_size", "extract_moment", "extract_sdp", "flat_extension_check", "jacobian_exp0",
    "monomials", "p_star", "sdp_candidates",
]
