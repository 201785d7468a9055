"""Entropy, binomial quantiles and concentration bounds used by the key-length calculators."""

from .binomial import inv_binomial_cdf
from .chernoff import ChernoffBound, chernoff_bound, chernoff_upper
from .entropy import binary_entropy
from .gamma_bound import clamp_lambda, gamma_upper

__all__ = [
    "ChernoffBound",
    "binary_entropy",
    "chernoff_bound",
    "chernoff_upper",
    "clamp_lambda",
    "gamma_upper",
    "inv_binomial_cdf",
]
