"""
B92 finite secure key length from sifted counts.

    l = N_R q - N_R h(Q) - L_EC - 2 log2(1/(2 eps_PA)) - log2(2/eps_cor)

The reconciliation leak is the one-way binomial bound evaluated on the
X-basis share of the received key, N_R^X = x_fraction * N_R.
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.params import SecurityParams
from mathkit import binary_entropy, inv_binomial_cdf
from timetag.sifting import FilterSweepResult, SiftedStats

logger = logging.getLogger("b92.finite")

X_FRACTION = 0.5


def leak_ec(n_r_x: float, qber: float, eps_cor: float) -> float:
    """
    Bits leaked by one-way error reconciliation on N = n_r_x bits at error rate Q.

        L = N h(Q) + [N (1-Q) - F^-1(eps_cor; N, 1-Q)] log2((1-Q)/Q) - log2(N)/2 - log2(1/eps_cor)

    At Q = 0 and Q = 1 the bracket is exactly zero and the log factor is dropped.
    The result is clamped at zero.

    Args:
        n_r_x: Reconciled key size N, at least 1 (rounded to a whole number of trials)
        qber: Error rate Q in [0, 1]
        eps_cor: Correctness parameter in (0, 1)

    Returns:
        Leaked bits, non-negative

    Raises:
        ValueError: If N < 1 or Q is outside [0, 1]
    """
    if n_r_x < 1:
        raise ValueError(f"Reconciled key size must be at least 1, got {n_r_x}")
    if not 0.0 <= qber <= 1.0:
        raise ValueError(f"QBER must lie in [0, 1], got {qber}")
    n = n_r_x
    leak = n * binary_entropy(qber) - 0.5 * math.log2(n) - math.log2(1.0 / eps_cor)
    if 0.0 < qber < 1.0:
        trials = max(1, int(round(n)))
        quantile = inv_binomial_cdf(eps_cor, trials, 1.0 - qber)
        leak += (n * (1.0 - qber) - quantile) * math.log2((1.0 - qber) / qber)
    return max(0.0, leak)


class B92Input(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_r: float = Field(ge=1)
    qber: float = Field(ge=0, le=1)
    q_factor: float = Field(default=1.0, gt=0, le=1)
    security: SecurityParams = Field(default_factory=SecurityParams)
    x_fraction: float = Field(default=X_FRACTION, gt=0, le=1)
    block_s: float = Field(default=1.0, gt=0)


class B92KeyResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    leak_bits: float
    hmin_bits: float
    key_len_bits: float
    skr_bps: float
    clamped: bool = False
    eps_qkd: float


def key_length_b92(data: B92Input) -> B92KeyResult:
    sec = data.security
    hmin = data.n_r * data.q_factor - data.n_r * binary_entropy(data.qber)
    leak = leak_ec(data.n_r * data.x_fraction, data.qber, sec.eps_cor)
    raw = hmin - leak - 2.0 * math.log2(1.0 / (2.0 * sec.eps_pa)) - math.log2(2.0 / sec.eps_cor)
    key = min(max(raw, 0.0), data.n_r)
    return B92KeyResult(
        leak_bits=leak,
        hmin_bits=max(hmin, 0.0),
        key_len_bits=key,
        skr_bps=key / data.block_s,
        clamped=raw <= 0.0,
        eps_qkd=sec.eps_qkd_b92(),
    )


def b92_keylen_fn(security: Optional[SecurityParams] = None, block_s: float = 1.0, q_factor: float = 1.0) -> Callable[[SiftedStats], float]:
    """SKR (bit/s) of a sifted cell, with N_R = SiKR * block_s bits per block."""
    security = security or SecurityParams()

    def skr(stats: SiftedStats) -> float:
        n_r = stats.sikr_bps * block_s
        if n_r < 1:
            return 0.0
        result = key_length_b92(
            B92Input(n_r=n_r, qber=stats.qber, q_factor=q_factor, security=security, block_s=block_s)
        )
        return result.skr_bps

    return skr


def skr_map_from_sweep(
    sweep: FilterSweepResult,
    security: Optional[SecurityParams] = None,
    block_s: float = 1.0,
) -> FilterSweepResult:
    """Fill ``skr_map`` of a sweep with the per-cell B92 key rate."""
    result = sweep.with_skr(b92_keylen_fn(security, block_s))
    best = float(np.max(result.skr_map)) if result.skr_map.size else 0.0
    logger.info(f"Best B92 SKR over the sweep: {best:.1f} bit/s (block {block_s} s)")
    return result
