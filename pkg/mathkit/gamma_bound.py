"""
Finite-size inflation of an estimated phase error rate.
"""

import math
from typing import Optional

from config import get_settings


def clamp_lambda(lam: float, lam_min: Optional[float] = None) -> float:
    """Clamp lam into [lam_min, 1 - lam_min]."""
    if lam_min is None:
        lam_min = get_settings().lambda_min
    return min(max(lam, lam_min), 1.0 - lam_min)


def gamma_upper(n: float, k: float, lam: float, eps: float) -> float:
    """
    Deviation gamma^U(n, k, lam, eps) added to a phase error rate measured on k
    samples to bound the rate on the n unmeasured ones.

    With A = max(n, k) and G = (n+k)/(n k) * ln((n+k) / (2 pi n k lam (1-lam) eps^2)):

        gamma = [(1-2 lam) A G/(n+k) + sqrt(A^2 G^2/(n+k)^2 + 4 lam (1-lam) G)]
                / (2 + 2 A^2 G/(n+k)^2)

    Args:
        n: Size of the population being bounded, at least 1
        k: Size of the measured sample, at least 1
        lam: Observed error rate, strictly inside (0, 1)
        eps: Failure probability in (0, 1)

    Returns:
        The additive deviation

    Raises:
        ValueError: If lam * (1 - lam) == 0 or the bound is undefined
    """
    if n < 1 or k < 1:
        raise ValueError(f"Sample sizes must be at least 1, got n={n}, k={k}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    var = lam * (1.0 - lam)
    if not var > 0.0:
        raise ValueError(f"gamma_upper needs lam strictly inside (0, 1), got {lam}; clamp it first")
    total = n + k
    a = max(n, k)
    g = total / (n * k) * math.log(total / (2.0 * math.pi * n * k * var * eps * eps))
    radicand = a * a * g * g / (total * total) + 4.0 * var * g
    if radicand < 0.0:
        raise ValueError(f"gamma_upper is undefined for n={n}, k={k}, lam={lam}, eps={eps}")
    numerator = (1.0 - 2.0 * lam) * a * g / total + math.sqrt(radicand)
    return numerator / (2.0 + 2.0 * a * a * g / (total * total))
