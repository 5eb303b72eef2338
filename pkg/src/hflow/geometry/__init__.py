"""Concrete Hadamard spaces and their geometry."""

from .base import RiemannianSpace, Space
from .isometries import EuclideanRigid, HyperbolicLorentz, SPDCongruence, TreeAutomorphism
from .ops import (
    AngleReport,
    GeodesicSegment,
    alexandrov_angle,
    apply_isometry,
    cat0_slack,
    distance,
    geodesic_point,
    project_to_segment,
    project_to_set,
    sample_points,
    sampled_cat0_slacks,
)
from .rays import EuclideanRay, HyperbolicRay, TreeRay, make_ray
from .serialize import isometry_from_json, point_from_json, set_from_json, space_from_json
from .sets import Ball, ConvexSet, Interval, Segment, TreeSpan
from .spaces import SPD, Euclidean, Hyperboloid, InnerProduct, Product, lorentz, tangent_combination
from .tree import MetricTree, TreeBatch, TreePoint

__all__ = [
    "AngleReport",
    "Ball",
    "ConvexSet",
    "Euclidean",
    "EuclideanRay",
    "EuclideanRigid",
    "GeodesicSegment",
    "HyperbolicLorentz",
    "HyperbolicRay",
    "Hyperboloid",
    "InnerProduct",
    "Interval",
    "MetricTree",
    "Product",
    "RiemannianSpace",
    "SPD",
    "SPDCongruence",
    "Segment",
    "Space",
    "TreeAutomorphism",
    "TreeBatch",
    "TreePoint",
    "TreeRay",
    "TreeSpan",
    "alexandrov_angle",
    "apply_isometry",
    "cat0_slack",
    "distance",
    "geodesic_point",
    "isometry_from_json",
    "lorentz",
    "make_ray",
    "point_from_json",
    "project_to_segment",
    "project_to_set",
    "sample_points",
    "sampled_cat0_slacks",
    "set_from_json",
    "space_from_json",
    "tangent_combination",
]
