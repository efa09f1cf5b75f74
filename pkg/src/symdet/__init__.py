"""Real-time intrinsic reflectional symmetry detection for triangle meshes.

Pipeline: cotangent Laplacian eigenbasis -> per-eigenfunction sign prediction
with a compact MLP -> diagonal functional map -> spectral-ICP refinement ->
dense point-wise symmetry correspondence.
"""

__version__ = "0.1.0"

from .errors import SymdetError
from .fmap import (
    MINUS,
    PLUS,
    UNKNOWN,
    PointMap,
    SignVector,
    fmap_to_pointmap,
    involution_residual,
    pointmap_to_fmap,
    pullback,
    refine_spectral_icp,
    signs_to_fmap,
)
from .mesh import (
    TriMesh,
    cotan_weights,
    load_mesh,
    load_mesh_file,
    normalize_area,
    save_mesh_file,
    save_off,
    validate_mesh,
    vertex_masses,
)
from .signnet import (
    FeatureMatrix,
    MlpParams,
    TrainConfig,
    build_features,
    forward,
    init_params,
    load_params,
    predict_signs,
    save_params,
    train,
)
from .spectral import (
    EigGroups,
    SpectralBasis,
    assemble,
    compute_basis,
    group_repeated,
    smallest_eigenpairs,
    spectral_embed,
)

__all__ = [
    "SymdetError",
    "TriMesh",
    "SpectralBasis",
    "EigGroups",
    "SignVector",
    "PointMap",
    "FeatureMatrix",
    "MlpParams",
    "TrainConfig",
    "PLUS",
    "MINUS",
    "UNKNOWN",
    "load_mesh",
    "load_mesh_file",
    "save_mesh_file",
    "save_off",
    "normalize_area",
    "vertex_masses",
    "cotan_weights",
    "validate_mesh",
    "assemble",
    "smallest_eigenpairs",
    "compute_basis",
    "group_repeated",
    "spectral_embed",
    "signs_to_fmap",
    "fmap_to_pointmap",
    "pointmap_to_fmap",
    "refine_spectral_icp",
    "involution_residual",
    "pullback",
    "build_features",
    "forward",
    "train",
    "predict_signs",
    "init_params",
    "save_params",
    "load_params",
]
