"""
Finite-key length for efficient BB84 without decoy states.

Expected counts over N_S = R * t_s sent signals are bounded with a
multiplicative Chernoff deviation for the multi-photon part and with
gamma_upper for the phase error rate:

    l = N_nmp^X (1 - h(phi_bar)) - L_EC - 2 log2(1/(2 eps_PA)) - log2(2/eps_cor)
"""

import logging
import math
from typing import Literal

from pydantic import BaseModel, ConfigDict

from b92.finite import leak_ec
from core.errors import InfeasibleError
from core.params import ProtocolInstance, SecurityParams
from core.probabilities import expected_qber, p_click, p_error_bb84, p_multiphoton
from mathkit import binary_entropy, chernoff_upper, clamp_lambda, gamma_upper

logger = logging.getLogger("bb84.finite")

ErrorModel = Literal["qber", "printed"]
LeakModel = Literal["efficiency", "binomial"]


class BB84Counts(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_s: float
    p_clk: float
    qber: float
    n_r_x: float
    n_r_z: float
    m_x: float
    m_z: float
    n_mp_x: float
    n_mp_z: float
    n_nmp_x: float
    n_nmp_z: float
    phi_x: float
    phi_x_bar: float
    feasible: bool

    def require_feasible(self) -> "BB84Counts":
        if not self.feasible:
            raise InfeasibleError(
                f"Multi-photon bound exhausts the received counts (N_nmp^X={self.n_nmp_x:.4g}, N_nmp^Z={self.n_nmp_z:.4g})"
            )
        return self


def expected_counts(inst: ProtocolInstance, error_model: ErrorModel = "qber", floor: bool = False) -> BB84Counts:
    """
    Expected sifted, error and multi-photon counts for one block.

    Args:
        inst: Protocol instance with p_x, eta_pre and t_s set
        error_model: ``qber`` takes P_err = Q * P_clk; ``printed`` uses p_error_bb84
        floor: Round the expected counts down to whole events

    Returns:
        BB84Counts; ``feasible`` is False when either basis has no
        non-multiphoton counts left, and the phase error is then 1/2
    """
    sec = inst.security
    n_s = inst.n_sent
    px2, pz2 = inst.p_x ** 2, inst.p_z ** 2
    clicks = p_click(inst)
    qber = expected_qber(inst)
    p_err = qber * clicks if error_model == "qber" else p_error_bb84(inst)
    p_m = p_multiphoton(inst)

    def count(x: float) -> float:
        return float(math.floor(x)) if floor else x

    n_r_x, n_r_z = count(n_s * px2 * clicks), count(n_s * pz2 * clicks)
    m_x, m_z = count(n_s * px2 * p_err), count(n_s * pz2 * p_err)
    n_mp_x = chernoff_upper(n_s * px2 * p_m, sec.eps_pe)
    n_mp_z = chernoff_upper(n_s * pz2 * p_m, sec.eps_pe)
    n_nmp_x, n_nmp_z = n_r_x - n_mp_x, n_r_z - n_mp_z

    feasible = n_nmp_x > 0 and n_nmp_z > 0 and n_r_x >= 1 and n_r_z >= 1
    if feasible:
        phi = clamp_lambda(m_z / n_nmp_z)
        phi_bar = phi + gamma_upper(n_r_z, n_r_x, phi, sec.eps_pa)
    else:
        logger.debug(f"Infeasible block at {inst.channel.loss_db} dB: N_nmp^X={n_nmp_x:.4g}, N_nmp^Z={n_nmp_z:.4g}")
        phi = phi_bar = 0.5
    return BB84Counts(
        n_s=n_s,
        p_clk=clicks,
        qber=qber,
        n_r_x=n_r_x,
        n_r_z=n_r_z,
        m_x=m_x,
        m_z=m_z,
        n_mp_x=n_mp_x,
        n_mp_z=n_mp_z,
        n_nmp_x=n_nmp_x,
        n_nmp_z=n_nmp_z,
        phi_x=phi,
        phi_x_bar=phi_bar,
        feasible=feasible,
    )


class BB84KeyResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    key_len_bits: float
    rate_per_pulse: float
    leak_bits: float
    clamped: bool
    feasible: bool
    eps_sec: float
    eps_qkd: float


def key_length_bb84(
    counts: BB84Counts,
    qber: float,
    security: SecurityParams,
    leak_model: LeakModel = "efficiency",
) -> BB84KeyResult:
    """
    Secure key length for one block, clamped at zero.

    ``leak_model="efficiency"`` charges f_EC * N_R^X * h(Q) for reconciliation;
    ``binomial`` uses the one-way bound of :func:`b92.finite.leak_ec`.
    Infeasible counts and phi_bar >= 1/2 give a zero key.
    """
    eps_sec, eps_qkd = security.eps_sec_bb84(), security.eps_qkd_bb84()
    if not counts.feasible or counts.phi_x_bar >= 0.5:
        return BB84KeyResult(
            key_len_bits=0.0,
            rate_per_pulse=0.0,
            leak_bits=0.0,
            clamped=True,
            feasible=counts.feasible,
            eps_sec=eps_sec,
            eps_qkd=eps_qkd,
        )
    if leak_model == "efficiency":
        leak = security.f_ec * counts.n_r_x * binary_entropy(qber)
    else:
        leak = leak_ec(counts.n_r_x, qber, security.eps_cor_bb84)
    raw = (
        counts.n_nmp_x * (1.0 - binary_entropy(counts.phi_x_bar))
        - leak
        - 2.0 * math.log2(1.0 / (2.0 * security.eps_pa))
        - math.log2(2.0 / security.eps_cor_bb84)
    )
    key = max(raw, 0.0)
    return BB84KeyResult(
        key_len_bits=key,
        rate_per_pulse=key / counts.n_s,
        leak_bits=leak,
        clamped=raw <= 0.0,
        feasible=True,
        eps_sec=eps_sec,
        eps_qkd=eps_qkd,
    )


def finite_rate(
    inst: ProtocolInstance,
    error_model: ErrorModel = "qber",
    leak_model: LeakModel = "efficiency",
    floor: bool = False,
) -> BB84KeyResult:
    """Key length of ``inst``'s block in one call."""
    counts = expected_counts(inst, error_model=error_model, floor=floor)
    return key_length_bb84(counts, counts.qber, inst.security, leak_model=leak_model)
