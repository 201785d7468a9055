"""Asymptotic BB84 key rate per pulse with a multi-photon fraction."""

import logging

from pydantic import BaseModel, ConfigDict

from core.params import ProtocolInstance
from core.probabilities import expected_qber, p_click, p_multiphoton
from mathkit import binary_entropy

logger = logging.getLogger("bb84.asymptotic")


class AsymptoticResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    rate_per_pulse: float
    rate_bps: float
    delta: float
    q: float
    p_clk: float
    p_m: float


def asymptotic_rate(inst: ProtocolInstance, pre_limit: bool = False) -> AsymptoticResult:
    """
    S = P_clk [Delta (1 - h(Q / Delta)) - h(Q)], Delta = (P_clk - P_m) / P_clk.

    With ``pre_limit`` the basis sifting and reconciliation efficiency stay in:
    S = p_x^2 P_clk [Delta (1 - h(Q / Delta)) - f_EC h(Q)]. The rate is zero
    when Delta <= 0 or Q / Delta > 1, and clamped at zero otherwise.
    """
    clicks = p_click(inst)
    p_m = p_multiphoton(inst)
    if clicks <= 0.0:
        return AsymptoticResult(rate_per_pulse=0.0, rate_bps=0.0, delta=0.0, q=0.0, p_clk=0.0, p_m=p_m)
    qber = expected_qber(inst)
    delta = max(0.0, (clicks - p_m) / clicks)
    rate = 0.0
    if delta > 0.0 and qber / delta <= 1.0:
        f_ec = inst.security.f_ec if pre_limit else 1.0
        sift = inst.p_x ** 2 if pre_limit else 1.0
        rate = sift * clicks * (delta * (1.0 - binary_entropy(qber / delta)) - f_ec * binary_entropy(qber))
    rate = max(rate, 0.0)
    return AsymptoticResult(
        rate_per_pulse=rate,
        rate_bps=rate * inst.source.clock_rate_hz,
        delta=delta,
        q=qber,
        p_clk=clicks,
        p_m=p_m,
    )
