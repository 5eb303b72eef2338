"""JSON descriptors for spaces, points, convex sets and isometries."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInput
from .isometries import EuclideanRigid, HyperbolicLorentz, SPDCongruence, TreeAutomorphism
from .sets import Ball, Interval, Segment, TreeSpan
from .spaces import SPD, Euclidean, Hyperboloid, InnerProduct, Product
from .tree import MetricTree


def space_from_json(obj):
    if isinstance(obj, dict) and "space" in obj and "kind" not in obj:
        obj = obj["space"]
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInput(f"space descriptor needs a 'kind': {obj!r}")
    kind = obj["kind"]
    if kind == "euclidean":
        return Euclidean(int(obj["dim"]))
    if kind == "inner_product":
        return InnerProduct(obj["gram"])
    if kind == "hyperboloid":
        return Hyperboloid(int(obj["dim"]))
    if kind == "spd":
        return SPD(int(obj["n"]))
    if kind == "tree":
        if "legs" in obj:
            return MetricTree.star(int(obj["legs"]), obj.get("length", 1.0))
        return MetricTree(obj["nodes"], obj["edges"])
    if kind == "product":
        return Product(tuple(space_from_json(f) for f in obj["factors"]))
    raise InvalidInput(f"unknown space kind {kind!r}")


def point_from_json(space, obj):
    return space.from_json(obj)


def set_from_json(space, obj):
    kind = obj.get("kind")
    if kind == "ball":
        return Ball(space, space.from_json(obj["center"]), float(obj["radius"]))
    if kind == "segment":
        return Segment(space, space.from_json(obj["x"]), space.from_json(obj["y"]))
    if kind == "span":
        return TreeSpan(space, tuple(space.from_json(p) for p in obj["points"]))
    if kind == "interval":
        return Interval(space, float(obj["lo"]), float(obj["hi"]))
    raise InvalidInput(f"unknown convex set kind {kind!r}")


def isometry_from_json(space, obj):
    kind = obj.get("kind")
    if kind == "rigid":
        return EuclideanRigid(space, np.asarray(obj["Q"], dtype=float), np.asarray(obj["v"], dtype=float))
    if kind == "tree_automorphism":
        mapping = obj["mapping"]
        if isinstance(mapping, list):
            mapping = dict(zip(space.labels, mapping))
        return TreeAutomorphism(space, mapping)
    if kind == "lorentz":
        return HyperbolicLorentz(space, np.asarray(obj["M"], dtype=float))
    if kind == "congruence":
        return SPDCongruence(space, np.asarray(obj["G"], dtype=float))
    raise InvalidInput(f"unknown isometry kind {kind!r}")
