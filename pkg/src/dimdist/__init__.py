"""Dyadic cube systems on finite metric spaces, dimension estimation via
optimal admissible covers, and empirical checks of dimension-distortion
bounds for Hölder-type sampled maps."""

from .dimension import (AntichainCover, DimensionEstimate, LevelWindow,
                        WindowConstants, admissible_levels, box_dimension,
                        covering_number, hausdorff_dimension,
                        intermediate_dimension, min_cover_cost)
from .distortion import (BoundParams, PushforwardReport, build_subdivision_graph,
                         classify_cubes, distortion_experiment, evaluate_bound,
                         pushforward_cover)
from .dyadic import (DyadicCube, DyadicParams, DyadicSystem, build_cubes,
                     build_net_points, build_system, child_bound, verify_system)
from .errors import CapacityError, DimdistError, DomainError, InputError
from .generators import GeneratedSet, generate, generate_map
from .holder import (BallCover, GradientSolution, MapSample, ch_p_sum,
                     epsilon_disjoint_cover, estimate_ch_profile,
                     hajlasz_gradient, holder_coefficient)
from .spaces import (FiniteMetricSpace, SubsetRef, diameter,
                     estimate_doubling_constant, estimate_uniform_perfectness,
                     whole_space)

__version__ = "0.1.0"

__all__ = [
    "AntichainCover", "BallCover", "BoundParams", "CapacityError",
    "DimdistError", "DimensionEstimate", "DomainError", "DyadicCube",
    "DyadicParams", "DyadicSystem", "FiniteMetricSpace", "GeneratedSet",
    "GradientSolution", "InputError", "LevelWindow", "MapSample",
    "PushforwardReport", "SubsetRef", "WindowConstants", "admissible_levels",
    "box_dimension", "build_cubes", "build_net_points", "build_subdivision_graph",
    "build_system", "ch_p_sum", "child_bound", "classify_cubes",
    "covering_number", "diameter", "distortion_experiment",
    "epsilon_disjoint_cover", "estimate_ch_profile",
    "estimate_doubling_constant", "estimate_uniform_perfectness",
    "evaluate_bound", "generate", "generate_map", "hajlasz_gradient",
    "hausdorff_dimension", "holder_coefficient", "intermediate_dimension",
    "min_cover_cost", "pushforward_cover", "verify_system", "whole_space",
]
