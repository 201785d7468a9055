"""
Single-node memory-assisted QKD key rate.

Alice and Bob each send photons that are entangled with a memory (QM-A, QM-B)
at a middle node. Loading is sequential: QM-A is loaded over the Alice-side
segment first, then QM-B over the Bob-side segment, and a Bell-state
measurement (BSM) on the two memories follows. Each loading attempt lasts
t_p + t_init and succeeds with

    p = eta_p * eta_c * eta_d * 10^(-segment_loss / 10) + 2 p_dark

so the attempt counts are geometric. QM-A dephases with time constant T2
while Bob's segment is loaded, which raises the X-basis error by
(1 - E[exp(-N_B tau / T2)]) / 2.
"""

import logging
import math
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from core.presets import get_repeater_block
from mathkit import binary_entropy

logger = logging.getLogger("repeater.model")


class RepeaterParams(BaseModel):
    """Hardware of the node and its two links; defaults are the shipped ``memory-node`` set."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eta_p: float = Field(default=0.7, ge=0, le=1)
    t_p: float = Field(default=1e-6, gt=0)
    t_init: float = Field(default=6e-5, ge=0)
    eta_c: float = Field(default=0.7, ge=0, le=1)
    eta_d: float = Field(default=0.7, ge=0, le=1)
    lambda_bsm: float = Field(default=1.0, ge=0, le=1)
    eta_bsm: float = Field(default=0.175, ge=0, le=1)
    f: float = Field(default=1.16, ge=1)
    e_ma: float = Field(default=0.01, ge=0, le=0.5)
    e_mb: float = Field(default=0.01, ge=0, le=0.5)
    t2_s: float = Field(default=0.01, gt=0)
    l_att_km: float = Field(default=22.0, gt=0)
    p_dark: float = Field(default=8e-7, ge=0, le=0.5)
    m_pairs: int = Field(default=1, ge=1)

    @classmethod
    def from_preset(cls, repeater_id: Optional[str] = None, **overrides: Any) -> "RepeaterParams":
        block: Dict[str, Any] = get_repeater_block(repeater_id)
        block.update(overrides)
        return cls.model_validate(block)

    @property
    def attempt_time_s(self) -> float:
        return self.t_p + self.t_init

    @property
    def link_efficiency(self) -> float:
        return self.eta_p * self.eta_c * self.eta_d

    def segment_km(self, segment_loss_db: float) -> float:
        """Fibre length of a segment, from exp(-L / l_att_km) = 10^(-loss / 10)."""
        return self.l_att_km * math.log(10.0) / 10.0 * segment_loss_db

    def with_t2(self, t2_s: float) -> "RepeaterParams":
        return self.model_copy(update={"t2_s": t2_s})


class NodePlacement(BaseModel):
    model_config = ConfigDict(frozen=True)

    frac_to_alice: float = Field(default=0.5, ge=0, le=1)

    def split(self, total_loss_db: float):
        """Loss of the Alice-side and Bob-side segments."""
        alice = total_loss_db * self.frac_to_alice
        return alice, total_loss_db - alice


class RepeaterRate(BaseModel):
    model_config = ConfigDict(frozen=True)

    rate_per_use: float
    rate_per_second: float
    e_x: float
    e_z: float
    p_alice: float
    p_bob: float
    mean_attempts: float
    frac_to_alice: float
    alice_km: float
    bob_km: float


def _flip(a: float, b: float) -> float:
    """Error probability after two independent bit flips."""
    return a * (1.0 - b) + b * (1.0 - a)


def segment_success(params: RepeaterParams, segment_loss_db: float):
    """Per-attempt herald probability of one segment and the share of false (dark) heralds."""
    eta = params.link_efficiency * 10.0 ** (-segment_loss_db / 10.0)
    single = min(1.0, eta + 2.0 * params.p_dark)
    dark_share = 2.0 * params.p_dark / (eta + 2.0 * params.p_dark) if single > 0 else 0.0
    p = 1.0 - (1.0 - single) ** params.m_pairs
    return p, dark_share


def dephasing_error(p_bob: float, attempt_time_s: float, t2_s: float) -> float:
    """X error of QM-A stored for N_B ~ Geom(p_bob) attempts."""
    if math.isinf(t2_s):
        return 0.0
    decay = math.exp(-attempt_time_s / t2_s)
    generating = p_bob * decay / (1.0 - (1.0 - p_bob) * decay)
    return 0.5 * (1.0 - generating)


def ma_qkd_rate(params: RepeaterParams, total_loss_db: float, placement: Optional[NodePlacement] = None) -> RepeaterRate:
    """
    Asymptotic key rate per channel use and per second.

        R = eta_BSM * max(0, 1 - h(e_x) - f h(e_z)) / (E[N_A] + E[N_B])

    Args:
        params: Node and link hardware
        total_loss_db: Loss between Alice and Bob
        placement: Share of the loss on Alice's side (midpoint by default)

    Returns:
        RepeaterRate; zero rate when the error rates leave no key
    """
    placement = placement or NodePlacement()
    loss_a, loss_b = placement.split(total_loss_db)
    p_a, dark_a = segment_success(params, loss_a)
    p_b, dark_b = segment_success(params, loss_b)
    attempts = 1.0 / p_a + 1.0 / p_b if p_a > 0 and p_b > 0 else math.inf

    e_dark = 0.5 * (1.0 - (1.0 - dark_a) * (1.0 - dark_b))
    e_z = _flip(_flip(params.e_ma, params.e_mb), _flip((1.0 - params.lambda_bsm) / 2.0, e_dark))
    e_x = _flip(e_z, dephasing_error(p_b, params.attempt_time_s, params.t2_s))

    fraction = 1.0 - binary_entropy(min(e_x, 0.5)) - params.f * binary_entropy(min(e_z, 0.5))
    rate = params.eta_bsm * max(0.0, fraction) / attempts
    return RepeaterRate(
        rate_per_use=rate,
        rate_per_second=rate / params.attempt_time_s,
        e_x=e_x,
        e_z=e_z,
        p_alice=p_a,
        p_bob=p_b,
        mean_attempts=attempts,
        frac_to_alice=placement.frac_to_alice,
        alice_km=params.segment_km(loss_a),
        bob_km=params.segment_km(loss_b),
    )


def direct_rate(params: RepeaterParams, total_loss_db: float) -> RepeaterRate:
    """Point-to-point reference with the same hardware and no memory: rate falls as 10^(-L/10)."""
    p = min(1.0, params.link_efficiency * 10.0 ** (-total_loss_db / 10.0) + 2.0 * params.p_dark)
    dark = 2.0 * params.p_dark / p if p > 0 else 0.0
    e = _flip(_flip(params.e_ma, params.e_mb), 0.5 * dark)
    fraction = 1.0 - (1.0 + params.f) * binary_entropy(min(e, 0.5))
    rate = p * max(0.0, fraction)
    return RepeaterRate(
        rate_per_use=rate,
        rate_per_second=rate / params.attempt_time_s,
        e_x=e,
        e_z=e,
        p_alice=p,
        p_bob=p,
        mean_attempts=1.0 / p if p > 0 else math.inf,
        frac_to_alice=1.0,
        alice_km=params.segment_km(total_loss_db),
        bob_km=0.0,
    )
