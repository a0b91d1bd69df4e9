from .em import ESTIMATORS, EstimatorResult, em_gaussian_missing, get_estimator, register
from .robust import MAD_SCALE, DistanceScreen, MadScreen, chi2_screen, mad, mad_screen, median

__all__ = [
    "ESTIMATORS",
    "MAD_SCALE",
    "DistanceScreen",
    "EstimatorResult",
    "MadScreen",
    "chi2_screen",
    "em_gaussian_missing",
    "get_estimator",
    "mad",
    "mad_screen",
    "median",
    "register",
]
