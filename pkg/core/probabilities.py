"""Detection and error probabilities shared by every calculator.

The signal term is the mean photon number reaching Bob's detectors per
pulse. By default it is ``mu_tran * eta_Ch * eta_rec * eta_pre``: the
transmitter efficiency enters once, through ``mu_tran``. Instances with
``count_eta_tran_twice`` use the literal ``T * mu_tran * eta_pre`` product.
"""

import math

from .errors import ParameterError
from .params import ProtocolInstance


def total_transmittance(inst: ProtocolInstance) -> float:
    """T = eta_tran * eta_Ch * eta_rec."""
    return inst.source.eta_tran * inst.channel.eta_ch * inst.receiver.eta_rec


def detected_mean(inst: ProtocolInstance) -> float:
    """Mean photon number per pulse arriving at Bob's detectors."""
    if inst.count_eta_tran_twice:
        return total_transmittance(inst) * inst.source.mu_tran * inst.eta_pre
    return inst.source.mu_tran * inst.channel.eta_ch * inst.receiver.eta_rec * inst.eta_pre


def p_click(inst: ProtocolInstance) -> float:
    """P_clk = P_dc + (1 - P_dc) * signal.

    Raises:
        ParameterError: If the signal term exceeds one.
    """
    signal = detected_mean(inst)
    if signal > 1.0:
        raise ParameterError(f"Detected mean photon number {signal:g} exceeds 1; P_clk is not a probability")
    p_dc = inst.receiver.p_dc
    return p_dc + (1.0 - p_dc) * signal


def p_multiphoton(inst: ProtocolInstance) -> float:
    """Upper bound g2(0) * mu_tran**2 * eta_pre**2 / 2."""
    mu = inst.source.mu_tran * inst.eta_pre
    return inst.source.g2_zero * mu * mu / 2.0


def expected_qber(inst: ProtocolInstance) -> float:
    """Q = (P_mis * signal + P_dc / 2) / P_clk.

    Raises:
        ParameterError: If P_clk is zero.
    """
    clicks = p_click(inst)
    if clicks <= 0.0:
        raise ParameterError("QBER is undefined when the click probability is zero")
    rec = inst.receiver
    return (rec.p_mis * detected_mean(inst) + rec.p_dc / 2.0) / clicks


def p_vacuum(inst: ProtocolInstance) -> float:
    """Empty-pulse probability exp(-mu_tran * eta_pre)."""
    return math.exp(-inst.source.mu_tran * inst.eta_pre)


def p_error_bb84(inst: ProtocolInstance) -> float:
    """P_err = P0 * P_dc / 2 + P_dc + (1 - P_dc) * signal * P_mis."""
    rec = inst.receiver
    return p_vacuum(inst) * rec.p_dc / 2.0 + rec.p_dc + (1.0 - rec.p_dc) * detected_mean(inst) * rec.p_mis


def loss_to_transmittance(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


def transmittance_to_loss(eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"Transmittance must be in (0, 1], got {eta}")
    return -10.0 * math.log10(eta)


def loss_to_distance(loss_db: float, db_per_km: float = 0.2) -> float:
    return loss_db / db_per_km


def distance_to_loss(distance_km: float, db_per_km: float = 0.2) -> float:
    return distance_km * db_per_km
