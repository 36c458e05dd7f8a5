"""Combinators that build regret minimizers for composite convex sets."""
from .affine import AffineImage, AffineMap, BlockEmbedding, affine_image, minkowski_sum
from .hull import ConvexHull, MixExperts, VPolytope, convex_hull, mix_experts, v_polytope
from .intersection import BregmanGeometry, ProjectIntersection, bregman_project, project_intersection
from .lagrangian import (
    LagrangianConstrain,
    PenaltyController,
    PenaltySchedule,
    lagrangian_constrain,
    linear_constraint,
)
from .product import CartesianProduct, cartesian_product

__all__ = [
    "AffineImage", "AffineMap", "BlockEmbedding", "affine_image", "minkowski_sum",
    "ConvexHull", "MixExperts", "VPolytope", "convex_hull", "mix_experts", "v_polytope",
    "BregmanGeometry", "ProjectIntersection", "bregman_project", "project_intersection",
    "LagrangianConstrain", "PenaltyController", "PenaltySchedule", "lagrangian_constrain",
    "linear_constraint", "CartesianProduct", "cartesian_product",
]
