"""
Inverse cumulative distribution of the binomial distribution.
"""

import math
from typing import Optional

import numpy as np
import scipy.stats

from config import get_settings

# Log-space slack when comparing the running CDF with eps. Ties such as
# CDF == 0.5 for p = 0.5 must resolve to the smaller k.
_LOG_SLACK = 1e-12


def inv_binomial_cdf(eps: float, n: int, p: float, exact_max_n: Optional[int] = None) -> int:
    """
    Smallest integer k with P[Binomial(n, p) <= k] >= eps.

    Exact summation in log space up to ``exact_max_n`` trials; above that a
    normal approximation with continuity and skewness corrections.

    Args:
        eps: Target cumulative probability in (0, 1)
        n: Number of trials, at least 1
        p: Success probability in [0, 1]
        exact_max_n: Switchover to the approximation (settings default)

    Returns:
        The quantile k in [0, n]

    Raises:
        ValueError: If an argument is outside its domain
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"Number of trials must be a positive integer, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Success probability must lie in [0, 1], got {p}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    n = int(n)
    if p == 0.0:
        return 0
    if p == 1.0:
        return n
    if exact_max_n is None:
        exact_max_n = get_settings().binomial_exact_max_n
    if n > exact_max_n:
        return _normal_quantile(eps, n, p)

    log_pmf = scipy.stats.binom.logpmf(np.arange(n + 1), n, p)
    log_cdf = np.logaddexp.accumulate(log_pmf)
    k = int(np.searchsorted(log_cdf, math.log(eps) - _LOG_SLACK, side="left"))
    return min(k, n)


def _normal_quantile(eps: float, n: int, p: float) -> int:
    mean = n * p
    sigma = math.sqrt(n * p * (1.0 - p))
    z = float(scipy.stats.norm.ppf(eps))
    skew = (1.0 - 2.0 * p) / sigma
    z_corrected = z + (z * z - 1.0) * skew / 6.0
    k = math.ceil(mean + sigma * z_corrected - 0.5)
    return int(min(max(k, 0), n))
