"""PL Morse-Cerf descriptors of time-varying scalar fields.

Vertex and Cerf diagrams, crossing taxonomy, tracking graphs, time-varying
Euler characteristic curves and the distance between families.
"""
__version__ = "0.1.0"

from .cerf import (CerfArc, CerfDiagram, CrossingKind, NonGenericFamily,  # noqa: E402
                   UnclassifiableCrossing, classify_crossing, compute_cerf_diagram,
                   maxima_tracks, seed_search, tracking_graph, verify_betti_update)
from .family import (TimeVaryingField, detect_crossings, enforce_genericity,  # noqa: E402
                     generate_gaussians)
from .mesh import (GridSpec, SimplicialComplex, freudenthal_2d, freudenthal_3d,  # noqa: E402
                   link, lower_link, validate_manifold)
from .plmorse import (classify_vertex, critical_points, ecc_lower_star,  # noqa: E402
                      homological_index, is_pl_morse)
from .tvecc import distance, distance_matrix, estimate_period, local_tvecc, tvecc  # noqa: E402
