"""Nonlinear eigenvalue problems for pairs of nonnegative homogeneous convex
functions: duality transforms, spectral equivalences, and combinatorial
oracles on graphs, hypergraphs, and convex bodies."""

from .linalg import LinearMap, CoordSelect
from .homfun import (HomFun, lp_norm, weighted_lp, linfty_max,
                     support_function, polytope_gauge, pullback, pushforward,
                     power, scale, composite_norm, composite_dual, dual,
                     dual_definitional, legendre, polarity, subgradient_any,
                     conjugate_exponent, from_json)
from .subdiff import (subdiff_at, contains, verify_eigenpair, transfer,
                      scale_eigenvalue, polarity_factor, EigenCertificate,
                      UnsupportedSubdifferential, kernels_overlap)
from .eigsolve import (SolveConfig, SpectrumEstimate, rayleigh, power_max,
                       ratiodca_min, grid_spectrum_2d, certified_candidates,
                       sign_vectors, RatioUndefined, RatioInfinite)
from .graphlap import (Graph, incidence, laplacian_pair, dual_forms, cheeger,
                       mincut, maxcut, multiway_maxcut_bound, diameter,
                       ball_size, inscribed_ball_bound, infty_eigvec_candidate,
                       ball_candidate, load_graph, SizeLimit)
from .hypercp import (Hypergraph, cp_objective, cp_scores, cp_dual,
                      lifted_dual_pair, load_hypergraph)
from .convbody import (SymPolytope, gauge, support, polar, st_extremes,
                       hat_distance, tangency_verify, banach_mazur_upper,
                       make_polytope, load_polytope, random_symmetric_polygon)

__version__ = "0.1.0"
