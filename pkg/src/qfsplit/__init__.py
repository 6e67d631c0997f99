"""Quasi-F-split heights of Calabi-Yau hypersurfaces over F_p.

The height of a degree-n hypersurface in n variables equals its
Artin-Mazur height; for quartic K3 surfaces finite values lie in
1..10. This package computes it two independent ways (a literal
polynomial iteration and a dense-matrix operator), backed by exact
multimodular NTT powering and delayed-reduction modular linear
algebra, and ships the published height tables as test fixtures.
"""

from .errors import DomainError, InternalInvariantError, ParseError, QfsplitError
from .height import (
    INFINITE,
    HeightResult,
    SurfaceProblem,
    default_bound,
    height_matrix,
    height_naive,
)
from .modmatrix import OverflowBudget, matmul, matvec, overflow_budget, uint64_budget
from .monomials import ExponentTuple, MonomialBasis, Packing, wics
from .mtsmatrix import (
    ZERO_MAP,
    MtsMatrix,
    build_mts,
    generate_matching,
    matrix_from_bytes,
    matrix_from_text,
    matrix_to_bytes,
    matrix_to_text,
    mts_merge,
    mts_triv,
    mts_wics,
    target_degree,
)
from .nttpower import poly_power_multimodular, power_mod_small
from .polyring import (
    DenseVector,
    SparsePoly,
    delta1,
    fedder_survives,
    from_dense,
    parse_poly,
    poly_to_text,
    power_mod_p,
    split_u,
    to_dense,
)
from .search import (
    FoundSurface,
    HeightHistogram,
    SearchConfig,
    fixtures_path,
    parse_fixtures,
    run_search,
    sample_surface,
    verify_fixtures,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "InternalInvariantError",
    "ParseError",
    "QfsplitError",
    "INFINITE",
    "HeightResult",
    "SurfaceProblem",
    "default_bound",
    "height_matrix",
    "height_naive",
    "OverflowBudget",
    "matmul",
    "matvec",
    "overflow_budget",
    "uint64_budget",
    "ExponentTuple",
    "MonomialBasis",
    "Packing",
    "wics",
    "ZERO_MAP",
    "MtsMatrix",
    "build_mts",
    "generate_matching",
    "matrix_from_bytes",
    "matrix_from_text",
    "matrix_to_bytes",
    "matrix_to_text",
    "mts_merge",
    "mts_triv",
    "mts_wics",
    "target_degree",
    "poly_power_multimodular",
    "power_mod_small",
    "DenseVector",
    "SparsePoly",
    "delta1",
    "fedder_survives",
    "from_dense",
    "parse_poly",
    "poly_to_text",
    "power_mod_p",
    "split_u",
    "to_dense",
    "FoundSurface",
    "HeightHistogram",
    "SearchConfig",
    "fixtures_path",
    "parse_fixtures",
    "run_search",
    "sample_surface",
    "verify_fixtures",
]
