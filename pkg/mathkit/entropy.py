"""
Binary Shannon entropy.
"""

import math
from typing import Union

import numpy as np
import scipy.special

ArrayLike = Union[float, np.ndarray]


def binary_entropy(q: ArrayLike) -> ArrayLike:
    """
    Binary entropy h(q) = -q log2 q - (1-q) log2 (1-q), with h(0) = h(1) = 0.

    Args:
        q: Probability, scalar or array, within [0, 1]

    Returns:
        Entropy in bits, with the same shape as the input

    Raises:
        ValueError: If any value lies outside [0, 1]
    """
    arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"Binary entropy argument must lie in [0, 1], got {q}")
    h = (scipy.special.entr(arr) + scipy.special.entr(1.0 - arr)) / math.log(2.0)
    if np.ndim(h) == 0:
        return float(h)
    return h
