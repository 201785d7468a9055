"""Parameter models for sources, channels, receivers, security and protocol runs.

All models are immutable. Derived quantities (the transmitted mean photon
number, the default epsilons) are filled in at validation time, while
``model_fields_set`` keeps track of what the caller actually supplied so
that overrides can be re-derived cleanly.
"""

import logging
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger("core.params")

Probability = float

# Relative tolerance for mu_sps * eta_tran == mu_tran when both are given.
MU_CONSISTENCY_RTOL = 1e-9


class SourceParams(BaseModel):
    """Single-photon source: clock, brightness, transmitter efficiency, purity."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    clock_rate_hz: float = Field(gt=0)
    mu_sps: Optional[float] = Field(default=None, ge=0)
    eta_tran: float = Field(default=1.0, ge=0, le=1)
    mu_tran: Optional[float] = Field(default=None, ge=0)
    g2_zero: float = Field(default=0.0, ge=0, le=1)
    lifetime_ns: float = Field(default=4.58, gt=0)

    @model_validator(mode="after")
    def _derive_mean_photon_numbers(self) -> "SourceParams":
        if self.mu_sps is None and self.mu_tran is None:
            raise ValueError("either mu_sps (with eta_tran) or mu_tran must be given")
        if self.mu_sps is not None and self.mu_tran is not None:
            expected = self.mu_sps * self.eta_tran
            if not math.isclose(expected, self.mu_tran, rel_tol=MU_CONSISTENCY_RTOL, abs_tol=0.0):
                raise ValueError(
                    f"mu_sps*eta_tran={expected:.12g} is inconsistent with mu_tran={self.mu_tran:.12g}"
                )
        elif self.mu_tran is None:
            object.__setattr__(self, "mu_tran", self.mu_sps * self.eta_tran)
        else:
            if self.eta_tran > 0:
                object.__setattr__(self, "mu_sps", self.mu_tran / self.eta_tran)
            elif self.mu_tran > 0:
                raise ValueError("mu_tran > 0 requires eta_tran > 0")
            else:
                object.__setattr__(self, "mu_sps", 0.0)
        return self


class ChannelParams(BaseModel):
    """Lossy channel described by its attenuation in dB."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    loss_db: float = Field(default=0.0, ge=0)
    att_length_km: float = Field(default=22.0, gt=0)
    db_per_km: float = Field(default=0.2, gt=0)

    @property
    def eta_ch(self) -> float:
        return 10.0 ** (-self.loss_db / 10.0)

    @property
    def distance_km(self) -> float:
        return self.loss_db / self.db_per_km

    @property
    def fibre_length_km(self) -> float:
        """Length with transmittance exp(-L / att_length_km) equal to eta_ch."""
        return self.loss_db * math.log(10.0) / 10.0 * self.att_length_km


class ReceiverParams(BaseModel):
    """Bob's detection stage."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eta_rec: Probability = Field(default=1.0, ge=0, le=1)
    p_dc: Probability = Field(default=0.0, ge=0, le=1)
    p_mis: Probability = Field(default=0.0, ge=0, le=1)

    @model_validator(mode="after")
    def _warn_high_dark_counts(self) -> "ReceiverParams":
        if self.p_dc > 1e-3:
            logger.warning(f"Dark-count probability {self.p_dc:g} per pulse is unusually high")
        return self


class SecurityParams(BaseModel):
    """Failure probabilities and reconciliation efficiency.

    Unset epsilons default from ``eps``: eps_pa = eps_cor = eps_ec = eps,
    eps_bar = (eps/8)**2 and eps_pe = 4*eps. ``eps_cor_bb84`` is the
    correctness parameter used by the BB84 calculators.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps: Probability = Field(default=1e-10, gt=0, lt=1)
    eps_pa: Optional[Probability] = Field(default=None, gt=0, lt=1)
    eps_bar: Optional[Probability] = Field(default=None, gt=0, lt=1)
    eps_cor: Optional[Probability] = Field(default=None, gt=0, lt=1)
    eps_ec: Optional[Probability] = Field(default=None, gt=0, lt=1)
    eps_pe: Optional[Probability] = Field(default=None, gt=0, lt=1)
    eps_cor_bb84: Probability = Field(default=1e-15, gt=0, lt=1)
    f_ec: float = Field(default=1.16, ge=1.0)

    @model_validator(mode="after")
    def _fill_defaults(self) -> "SecurityParams":
        defaults = {
            "eps_pa": self.eps,
            "eps_bar": (self.eps / 8.0) ** 2,
            "eps_cor": self.eps,
            "eps_ec": self.eps,
            "eps_pe": min(4.0 * self.eps, 0.999),
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        return self

    def eps_qkd_b92(self) -> float:
        """Composed B92 failure probability eps_cor + 2*eps_bar + eps_pa."""
        return self.eps_cor + 2.0 * self.eps_bar + self.eps_pa

    def eps_sec_bb84(self) -> float:
        return self.eps_pa + self.eps_pe + self.eps_ec

    def eps_qkd_bb84(self) -> float:
        return self.eps_sec_bb84() + self.eps_cor_bb84


class StreamModel(BaseModel):
    """Apparatus knobs for the synthetic time-tag generator.

    The defaults describe an ideal B92 receiver: no EOM transition errors,
    no extra analyzer loss, and the receiver's own misalignment.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: Literal["qkd", "hbt"] = "qkd"
    photon_statistics: Literal["sub_poisson", "poisson"] = "sub_poisson"
    p_mis: Optional[Probability] = Field(default=None, ge=0, le=1)
    analyzer_transmission: Probability = Field(default=1.0, ge=0, le=1)
    delay_ns: float = Field(default=0.0, ge=0)
    jitter_ps: Optional[float] = Field(default=None, ge=0)
    eom_settle_ns: float = Field(default=0.0, ge=0)
    eom_flat_end_ns: Optional[float] = Field(default=None, gt=0)
    edge_error_prob: Probability = Field(default=0.5, ge=0, le=1)
    random_bits: bool = False


class ProtocolInstance(BaseModel):
    """One fully specified protocol run: hardware, channel, security and choices."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    source: SourceParams
    channel: ChannelParams = Field(default_factory=ChannelParams)
    receiver: ReceiverParams = Field(default_factory=ReceiverParams)
    security: SecurityParams = Field(default_factory=SecurityParams)
    p_x: float = Field(default=0.5, gt=0, le=1)
    eta_pre: float = Field(default=1.0, gt=0, le=1)
    t_s: float = Field(default=1.0, gt=0)
    count_eta_tran_twice: bool = False
    stream: StreamModel = Field(default_factory=StreamModel)
    preset_id: Optional[str] = None

    @model_validator(mode="after")
    def _at_least_one_signal(self) -> "ProtocolInstance":
        if self.source.clock_rate_hz * self.t_s < 1.0:
            raise ValueError("clock_rate_hz * t_s must be at least one sent signal")
        return self

    @property
    def p_z(self) -> float:
        return 1.0 - self.p_x

    @property
    def n_sent(self) -> float:
        """N_S = R * t_s."""
        return self.source.clock_rate_hz * self.t_s

    def with_loss(self, loss_db: float) -> "ProtocolInstance":
        channel = ChannelParams.model_validate({**self.channel.model_dump(), "loss_db": loss_db})
        return self.model_copy(update={"channel": channel})

    def with_choices(self, p_x: Optional[float] = None, eta_pre: Optional[float] = None) -> "ProtocolInstance":
        update = {}
        if p_x is not None:
            update["p_x"] = p_x
        if eta_pre is not None:
            update["eta_pre"] = eta_pre
        return self.model_copy(update=update)
