"""Projective duality of hypersurfaces: dual clouds, outlines, slices and reconstruction."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .projective import (ProjPoint, Hyperplane, canonicalize, canonicalize_rows, chart,  # noqa: F401
                         inverse_chart, best_chart, embed_affine, orth_complement_contains,
                         hyperplane_from_affine, retract, projective_distance, hausdorff,
                         directed_hausdorff)
from .surfaces import (ParametricSurface, SurfaceSample, SampleSet, normal, second_form,  # noqa: F401
                       gauss_rank, sample_grid, isotropic_directions, circle, ellipse, sphere,
                       ellipsoid, torus, graph_patch, plane_patch, linear_image, parse_shape)
from .duality import (DualCloud, dual_point, dual_cloud, bidual_solve,  # noqa: F401
                      involution_residual, involution_residuals, admissibility_report)
from .outlines import (OutlineSet, CriticalSet, frame, project_direction,  # noqa: F401
                      fibonacci_directions, critical_set, outline, slice_admissible, slice_dual,
                      outline_dual)
from .reconstruct import (ProjectiveMap, ReconstructionReport, assemble_dual_from_outlines,  # noqa: F401
                          estimate_tangent_hyperplane, envelope, apply_map, dual_transform,
                          equivariance_residual, homothety_fit)
from ._backend import backend_name  # noqa: F401
