from .experiment import (
    DEFAULT_METHODS,
    METHOD_CATALOGUE,
    ExperimentResult,
    aggregate,
    max_over_k,
    method_config,
    methods_from_doc,
    run_experiment,
    scenarios_from_doc,
)
from .metrics import lrt_divergence, lrt_metric, mse_metric, precision_recall
from .scenarios import (
    KINDS,
    ContaminatedSample,
    Scenario,
    contaminate_casewise,
    contaminate_cellwise,
    contaminate_mixed,
    gen_clean,
    generate,
    outlier_direction,
    random_correlation,
)
from .skewnormal import InjectionResult, SkewNormalParams, injection_from_doc, run_injection_grid, sn_injection_experiment

__all__ = [
    "DEFAULT_METHODS",
    "KINDS",
    "METHOD_CATALOGUE",
    "ContaminatedSample",
    "ExperimentResult",
    "InjectionResult",
    "Scenario",
    "SkewNormalParams",
    "aggregate",
    "contaminate_casewise",
    "contaminate_cellwise",
    "contaminate_mixed",
    "gen_clean",
    "generate",
    "injection_from_doc",
    "lrt_divergence",
    "lrt_metric",
    "max_over_k",
    "method_config",
    "methods_from_doc",
    "mse_metric",
    "outlier_direction",
    "precision_recall",
    "random_correlation",
    "run_experiment",
    "run_injection_grid",
    "scenarios_from_doc",
    "sn_injection_experiment",
]
