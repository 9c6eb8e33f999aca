"""Level-set fire-front simulation with Bayesian data assimilation."""

from ._core import (
    ConfigError,
    CycleOutput,
    FilterConfig,
    FilterOutput,
    Grid,
    Ignition,
    IoError,
    LevelSetField,
    NumericError,
    RosParams,
    RosPrior,
    RunConfig,
    SolverConfig,
    __version__,
    enkf_run,
    extract_contour,
    jaccard_fronts,
    parse_run_config,
    pf_run,
    polygon_area,
    propagate,
    reinitialize,
    run_config_to_json,
    signed_distance_circle,
    signed_distance_polygon,
)

__all__ = [
    "ConfigError",
    "CycleOutput",
    "FilterConfig",
    "FilterOutput",
    "Grid",
    "Ignition",
    "IoError",
    "LevelSetField",
    "NumericError",
    "RosParams",
    "RosPrior",
    "RunConfig",
    "SolverConfig",
    "__version__",
    "enkf_run",
    "extract_contour",
    "jaccard_fronts",
    "parse_run_config",
    "pf_run",
    "polygon_area",
    "propagate",
    "reinitialize",
    "run_config_to_json",
    "signed_distance_circle",
    "signed_distance_polygon",
]
