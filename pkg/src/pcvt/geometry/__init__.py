from .domain import (
    GeneratorSet,
    TorusDomain,
    TorusKind,
    admissible_hex_pairs,
    honeycomb,
    torus_distance,
)
from .polygon import (
    isoperimetric_ratio,
    polygon_area,
    polygon_centroid,
    polygon_perimeter,
    polygon_second_moment,
)
from .tessellation import PeriodicDelaunay, PeriodicTessellation, build_tessellation

__all__ = [
    "GeneratorSet",
    "PeriodicDelaunay",
    "PeriodicTessellation",
    "TorusDomain",
    "TorusKind",
    "admissible_hex_pairs",
    "build_tessellation",
    "honeycomb",
    "isoperimetric_ratio",
    "polygon_area",
    "polygon_centroid",
    "polygon_perimeter",
    "polygon_second_moment",
    "torus_distance",
]
