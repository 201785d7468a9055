"""
Chernoff deviation for upper-bounding an observed count from its expectation.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ChernoffBound:
    beta: float
    mean_star: float
    delta_u: float

    @property
    def upper(self) -> float:
        return self.mean_star + self.delta_u


def chernoff_bound(mean_star: float, eps_pe: float) -> ChernoffBound:
    """
    Deviation delta_u = (beta + sqrt(8 beta N* + beta^2)) / 2 with beta = -ln(eps_pe).

    Args:
        mean_star: Expected count N*, non-negative
        eps_pe: Parameter-estimation failure probability in (0, 1)

    Returns:
        The bound with its ingredients

    Raises:
        ValueError: If mean_star is negative or eps_pe is outside (0, 1)
    """
    if mean_star < 0:
        raise ValueError(f"Expected count must be non-negative, got {mean_star}")
    if not 0.0 < eps_pe < 1.0:
        raise ValueError(f"eps_pe must lie in (0, 1), got {eps_pe}")
    beta = -math.log(eps_pe)
    delta_u = (beta + math.sqrt(8.0 * beta * mean_star + beta * beta)) / 2.0
    return ChernoffBound(beta=beta, mean_star=float(mean_star), delta_u=delta_u)


def chernoff_upper(mean_star: float, eps_pe: float) -> float:
    """Upper bound N* + delta_u on a count with expectation N*."""
    return chernoff_bound(mean_star, eps_pe).upper
