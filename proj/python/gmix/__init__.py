"""Gradient-based fitting for Gaussian and heavy-tailed mixture families."""

from ._core import (
    ConfigError,
    InvalidInput,
    NumericError,
    aic,
    ari,
    bic,
    constrain,
    em_fit,
    fit,
    gradcheck,
    init_params,
    loglik_grad,
    logistic_map_grad,
    nested_sigmoid_grad,
    param_count,
    responsibilities,
    simulate,
)

__all__ = [
    "ConfigError",
    "InvalidInput",
    "NumericError",
    "aic",
    "ari",
    "bic",
    "constrain",
    "em_fit",
    "fit",
    "gradcheck",
    "init_params",
    "loglik_grad",
    "logistic_map_grad",
    "nested_sigmoid_grad",
    "param_count",
    "responsibilities",
    "simulate",
]

__version__ = "0.1.0"
