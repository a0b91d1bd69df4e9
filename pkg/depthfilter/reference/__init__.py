from .distributions import (
    FAMILIES,
    DepthRegionSpec,
    EmpiricalReference,
    GaussianReference,
    ReferenceDistribution,
    SkewNormalReference,
    StudentT5Reference,
    build_reference,
    cbeta_contains,
    chi2_cdf,
    chi2_quantile,
    delta_cdf,
    delta_quantile,
    marginal_cdf,
    sample,
    sn_mean_cov,
    theoretical_depth,
)

__all__ = [
    "FAMILIES",
    "DepthRegionSpec",
    "EmpiricalReference",
    "GaussianReference",
    "ReferenceDistribution",
    "SkewNormalReference",
    "StudentT5Reference",
    "build_reference",
    "cbeta_contains",
    "chi2_cdf",
    "chi2_quantile",
    "delta_cdf",
    "delta_quantile",
    "marginal_cdf",
    "sample",
    "sn_mean_cov",
    "theoretical_depth",
]
