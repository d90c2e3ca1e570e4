"""Physical setup: band, noise, power budget and channel gains.

Channel draws are reproducible across platforms: a numpy ``PCG64`` stream
seeded with ``seed`` yields uniforms ``u`` via ``Generator.random`` and each
small-scale power gain is the inverse-CDF exponential ``-log1p(-u)``. The
first draw belongs to the bit user, the following ones to the semantic users
in generation order, so adding users never changes the existing gains.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .semantic_model import LogisticParams, SemanticConfig, linear_to_db

RNG_ALGORITHM = "numpy.PCG64/random/inverse-cdf-exponential/v1"


@dataclass(frozen=True)
class PathLossModel:
    rho0_db: float = -30.0
    exponent: float = 3.0
    distance_m: float = 30.0

    def __post_init__(self):
        if self.distance_m < 1:
            raise DomainError(f"distance must be at least 1 m, got {self.distance_m}")
        if not self.exponent > 0:
            raise DomainError(f"path-loss exponent must be positive, got {self.exponent}")

    @property
    def linear(self) -> float:
        """Mean power gain ``rho0 * distance**-exponent``."""
        return 10.0 ** (self.rho0_db / 10.0) * self.distance_m ** (-self.exponent)


def draw_channels(pl: PathLossModel, n_users: int, seed: int) -> np.ndarray:
    """Rayleigh-faded power gains: path loss times unit-mean exponential draws."""
    if n_users < 1:
        raise DomainError("n_users must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(n_users)
    return pl.linear * -np.log1p(-u)


def noise_power_w(noise_psd_dbm_hz: float, bandwidth_hz: float) -> float:
    if not bandwidth_hz > 0:
        raise DomainError("bandwidth must be positive")
    return 10.0 ** ((noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz


def sinr_db(signal_w: float, interference_w: float, noise_w: float) -> float:
    """SINR in dB; a silent signal gives ``-inf``."""
    if not noise_w > 0:
        raise DomainError("noise power must be positive")
    if signal_w < 0 or interference_w < 0:
        raise DomainError("powers must be non-negative")
    if signal_w == 0:
        return -math.inf
    return linear_to_db(signal_w / (interference_w + noise_w))


@dataclass(frozen=True)
class Scenario:
    """One channel realization.

    ``gains_sem`` is stored sorted in descending order (user 1 is the strongest);
    ``user_order[j]`` is the position of sorted user ``j`` in the input sequence.
    """

    bandwidth_hz: float
    noise_psd_dbm_hz: float
    p_max_watt: float
    gain_bit: float
    gains_sem: tuple[float, ...]
    cfg: SemanticConfig
    params: LogisticParams
    seed: int = 0
    path_loss: PathLossModel | None = None
    user_order: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise DomainError("bandwidth must be positive")
        if not self.p_max_watt > 0:
            raise DomainError("power budget must be positive")
        gains = [float(g) for g in self.gains_sem]
        if not self.gain_bit > 0 or any(not g > 0 for g in gains):
            raise DomainError("all channel gains must be positive")
        self.cfg.check(self.params)
        # stable sort keeps the input order among equal gains
        order = tuple(sorted(range(len(gains)), key=lambda j: -gains[j]))
        object.__setattr__(self, "gains_sem", tuple(gains[j] for j in order))
        object.__setattr__(self, "user_order", order)
        object.__setattr__(self, "gain_bit", float(self.gain_bit))

    @property
    def n_sem(self) -> int:
        return len(self.gains_sem)

    @property
    def noise_w(self) -> float:
        """Noise power over the whole band."""
        return noise_power(self, self.bandwidth_hz)

    @property
    def snr_bit(self) -> float:
        """Full-power, full-band SNR of the bit user (linear)."""
        return self.p_max_watt * self.gain_bit / self.noise_w

    @property
    def snr_sem(self) -> np.ndarray:
        return self.p_max_watt * np.asarray(self.gains_sem) / self.noise_w

    @property
    def max_semantic_rate(self) -> float:
        """Rate ceiling ``a2 * w * i_per_l / k`` of one semantic user."""
        return self.params.a2 * self.cfg.rate_scale(self.bandwidth_hz)

    @property
    def plateau_edge(self) -> float:
        """Largest rate at which the similarity threshold alone sets the SINR floor."""
        return self.cfg.s_th * self.cfg.rate_scale(self.bandwidth_hz)

    def single_user_bit_rate(self) -> float:
        """Bit rate with the whole band and full power, no interference."""
        return self.bandwidth_hz * math.log2(1.0 + self.snr_bit)

    def replace(self, **changes) -> "Scenario":
        data = {
            "bandwidth_hz": self.bandwidth_hz,
            "noise_psd_dbm_hz": self.noise_psd_dbm_hz,
            "p_max_watt": self.p_max_watt,
            "gain_bit": self.gain_bit,
            "gains_sem": self.gains_sem,
            "cfg": self.cfg,
            "params": self.params,
            "seed": self.seed,
            "path_loss": self.path_loss,
        }
        data.update(changes)
        return Scenario(**data)

    def with_threshold(self, s_th: float) -> "Scenario":
        return self.replace(cfg=SemanticConfig(k=self.cfg.k, i_per_l=self.cfg.i_per_l, s_th=s_th))

    def to_dict(self) -> dict:
        return {
            "bandwidth_hz": self.bandwidth_hz,
            "noise_psd_dbm_hz": self.noise_psd_dbm_hz,
            "p_max_watt": self.p_max_watt,
            "gain_bit": self.gain_bit,
            "gains_sem": list(self.gains_sem),
            "user_order": list(self.user_order),
            "cfg": asdict(self.cfg),
            "params": asdict(self.params),
            "seed": self.seed,
            "path_loss": asdict(self.path_loss) if self.path_loss else None,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def noise_power(scn: Scenario, bandwidth_hz: float) -> float:
    """Thermal noise power (W) in ``bandwidth_hz`` at the scenario's noise density."""
    return noise_power_w(scn.noise_psd_dbm_hz, bandwidth_hz)


def generate_scenario(
    n_sem: int,
    *,
    cfg: SemanticConfig,
    params: LogisticParams,
    seed: int,
    path_loss: PathLossModel = PathLossModel(),
    bandwidth_hz: float = 1e6,
    noise_psd_dbm_hz: float = -140.0,
    p_max_watt: float = 0.1,
) -> Scenario:
    """Draw gains for one bit user and ``n_sem`` semantic users at the path-loss distance."""
    gains = draw_channels(path_loss, n_sem + 1, seed)
    return Scenario(
        bandwidth_hz=bandwidth_hz,
        noise_psd_dbm_hz=noise_psd_dbm_hz,
        p_max_watt=p_max_watt,
        gain_bit=float(gains[0]),
        gains_sem=tuple(float(g) for g in gains[1:]),
        cfg=cfg,
        params=params,
        seed=seed,
        path_loss=path_loss,
    )


def explicit_scenario(
    gain_bit: float,
    gains_sem: Sequence[float],
    *,
    cfg: SemanticConfig,
    params: LogisticParams,
    bandwidth_hz: float = 1e6,
    noise_psd_dbm_hz: float = -140.0,
    p_max_watt: float = 0.1,
) -> Scenario:
    """Scenario from user-supplied linear gains, bypassing the random draw."""
    return Scenario(
        bandwidth_hz=bandwidth_hz,
        noise_psd_dbm_hz=noise_psd_dbm_hz,
        p_max_watt=p_max_watt,
        gain_bit=gain_bit,
        gains_sem=tuple(gains_sem),
        cfg=cfg,
        params=params,
    )
