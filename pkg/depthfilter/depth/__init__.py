from .elliptical import (
    LocationScatter,
    gy_depth,
    hs_depth_elliptical,
    mahalanobis_depth,
    mahalanobis_sq,
)
from .halfspace import (
    DEFAULT_DIRECTIONS,
    direction_batch,
    hs_depth_1d,
    hs_depth_exact_2d,
    hs_depths_1d,
    hs_depths_exact_2d,
    max_depth_observation,
    random_directions,
    random_tukey_depth,
    random_tukey_depths,
    random_tukey_self_depths,
    sample_depths,
    self_depths,
)

__all__ = [
    "DEFAULT_DIRECTIONS",
    "LocationScatter",
    "direction_batch",
    "gy_depth",
    "hs_depth_1d",
    "hs_depth_elliptical",
    "hs_depth_exact_2d",
    "hs_depths_1d",
    "hs_depths_exact_2d",
    "mahalanobis_depth",
    "mahalanobis_sq",
    "max_depth_observation",
    "random_directions",
    "random_tukey_depth",
    "random_tukey_depths",
    "random_tukey_self_depths",
    "sample_depths",
    "self_depths",
]
