"""Exact moments and tilings of orthogonal projections of the n-cube."""

__version__ = "0.1.0"

from .errors import (AcceptanceTooLow, CubeShadowError, DegenerateDirection,  # noqa: E402
                     DegenerateSubspace, DimensionMismatch, EmptyBatch, NumericalFailure,
                     Outside, RankDeficient, TooManySubsets)
from .grassmann import (deviation_histogram, ensemble_run, lemma31_experiment,  # noqa: E402
                        lipschitz_probe)
from .moments import (MomentReport, body_report, centered_quadratic_variance,  # noqa: E402
                      face_moment, face_moment_dir, tile_variance)
from .sampling import (MCMoments, SampleBatch, contains, mc_moments,  # noqa: E402
                       rejection_sample, sample_uniform)
from .subspace import (ProjectorDistance, Subspace, axis_subspace, haar_subspace,  # noqa: E402
                       orthonormalize, projector_distance, read_subspace, to_E_coords)
from .tiling import (Face, TileGeometry, Tiling, enumerate_tiling, locate,  # noqa: E402
                     tile_geometry, zonotope_volume)

__all__ = [
    "AcceptanceTooLow", "CubeShadowError", "DegenerateDirection", "DegenerateSubspace",
    "DimensionMismatch", "EmptyBatch", "NumericalFailure", "Outside", "RankDeficient",
    "TooManySubsets", "deviation_histogram", "ensemble_run", "lemma31_experiment",
    "lipschitz_probe", "MomentReport", "body_report", "centered_quadratic_variance",
    "face_moment", "face_moment_dir", "tile_variance", "MCMoments", "SampleBatch", "contains",
    "mc_moments", "rejection_sample", "sample_uniform", "ProjectorDistance", "Subspace",
    "axis_subspace", "haar_subspace", "orthonormalize", "projector_distance", "read_subspace",
    "to_E_coords", "Face", "TileGeometry", "Tiling", "enumerate_tiling", "locate",
    "tile_geometry", "zonotope_volume",
]
