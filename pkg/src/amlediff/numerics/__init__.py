from .linalg import (
    DEFAULT_RANK_TOL,
    SymmetricEigen,
    fd_jacobian,
    kron,
    numerical_rank,
    pinv_sqrt,
    psd_sqrt,
    solve_linear,
    sym_eigen,
)
from .random import NoiseSource, standard_normals
from .special import chi2_cdf, chi2_quantile, gammainc_lower, gammainc_upper

__all__ = [
    "DEFAULT_RANK_TOL",
    "NoiseSource",
    "SymmetricEigen",
    "chi2_cdf",
    "chi2_quantile",
    "fd_jacobian",
    "gammainc_lower",
    "gammainc_upper",
    "kron",
    "numerical_rank",
    "pinv_sqrt",
    "psd_sqrt",
    "solve_linear",
    "standard_normals",
    "sym_eigen",
]
