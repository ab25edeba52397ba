"""Fractional Brownian motion, fractional Bessel processes and the divergence integral of sign(B)."""

from ._backend import BACKEND
from .chaos import sign_coeff, sign_covariance, sign_term_variance, x_coeff, x_term_variance
from .config import ExperimentConfig, load_config, parse_config
from .errors import ConfigError, ConsistencyError, DegeneratePathError, FbesselError
from .fbm import FbmPath, HurstParam, Method, TimeGrid, fbm_covariance, sample_fbm
from .fracops import kernel_K, kstar_apply
from .lrd import constants_CK, geometry, lrd_verdict, rn_mc, rn_quad_1d, rho_parts_quad_d
from .processes import MollifierConfig, ProcessPath, XEnsemble, bessel_path, x_process_1d, x_process_multi
from .reports import TestReport

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "ConsistencyError",
    "DegeneratePathError",
    "ExperimentConfig",
    "FbesselError",
    "FbmPath",
    "HurstParam",
    "Method",
    "MollifierConfig",
    "ProcessPath",
    "TestReport",
    "TimeGrid",
    "XEnsemble",
    "bessel_path",
    "constants_CK",
    "fbm_covariance",
    "geometry",
    "kernel_K",
    "kstar_apply",
    "load_config",
    "lrd_verdict",
    "parse_config",
    "rho_parts_quad_d",
    "rn_mc",
    "rn_quad_1d",
    "sample_fbm",
    "sign_coeff",
    "sign_covariance",
    "sign_term_variance",
    "x_coeff",
    "x_process_1d",
    "x_process_multi",
    "x_term_variance",
]
