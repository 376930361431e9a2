"""Numerical laboratory for a bipartite non-Hermitian random-matrix system.

Modules:

* ``linalg``     dense complex kernels (eig, expm, logm, Takagi, rank, CSV io)
* ``ensembles``  seeded GOE / Haar / phase generators
* ``model``      bipartite eigenket construction and nullspace analytics
* ``densities``  density-operator families and static diagnostics
* ``dynamics``   time evolution, echoes, long-time averages
* ``cli``        the ``nlslab`` command line runner
"""

from .linalg import (
    DimMismatch,
    EigenSystem,
    LinalgError,
    NonConvergence,
    NotSymmetric,
    SingularInput,
    TakagiFactors,
    eig_general,
    expm,
    hs_products,
    logm_principal,
    rank_tol,
    takagi,
)
from .ensembles import EnsembleConfig, goe, haar_orthogonal, random_phases
from .model import BipartiteModel, ModelConfig, build, nls_eigenvectors
from .densities import DensitySpec, DensityOperator, make_density

__all__ = [
    "BipartiteModel",
    "DensityOperator",
    "DensitySpec",
    "DimMismatch",
    "EigenSystem",
    "EnsembleConfig",
    "LinalgError",
    "ModelConfig",
    "NonConvergence",
    "NotSymmetric",
    "SingularInput",
    "TakagiFactors",
    "build",
    "eig_general",
    "expm",
    "goe",
    "haar_orthogonal",
    "hs_products",
    "logm_principal",
    "make_density",
    "nls_eigenvectors",
    "random_phases",
    "rank_tol",
    "takagi",
]

__version__ = "0.1.0"
