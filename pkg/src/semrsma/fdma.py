"""FDMA boundary points.

Each semantic user transmits at full power on the narrowest band that still
delivers the target rate; the bit user takes what is left of the band at full
power. The per-user band is the root of the increasing function

    f(w) = (w / k) * i_per_l * eps(10 log10(P g / (w N0))) - S

bracketed above by the band at which the SNR falls to the similarity floor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import bisect

from .errors import InfeasiblePoint, InfeasibleUser
from .scenario import Scenario
from .semantic_model import db_to_linear, gamma_sem, linear_to_db, similarity


@dataclass(frozen=True)
class FdmaAllocation:
    s_rate: float
    w_sem: tuple[float, ...]
    w_bit: float
    p_sem: tuple[float, ...]
    p_bit: float
    bit_rate: float


def _noise_density_w(scn: Scenario) -> float:
    return 10.0 ** ((scn.noise_psd_dbm_hz - 30.0) / 10.0)


def user_rate(scn: Scenario, gain: float, bandwidth_hz: float, power_w: float | None = None) -> float:
    """Semantic rate of one user alone on ``bandwidth_hz``."""
    if bandwidth_hz <= 0:
        return 0.0
    p = scn.p_max_watt if power_w is None else power_w
    snr = p * gain / (bandwidth_hz * _noise_density_w(scn))
    return scn.cfg.rate_scale(bandwidth_hz) * similarity(scn.params, linear_to_db(snr))


def max_band_at_floor(scn: Scenario, gain: float, power_w: float | None = None) -> float:
    """Widest band keeping the SNR at the similarity floor."""
    p = scn.p_max_watt if power_w is None else power_w
    g_lin = db_to_linear(gamma_sem(scn.params, scn.cfg.s_th))
    return p * gain / (g_lin * _noise_density_w(scn))


def min_bandwidth_user(scn: Scenario, gain: float, target_rate: float, power_w: float | None = None) -> float:
    """Smallest band (Hz) on which a user with ``gain`` reaches ``target_rate``.

    ``power_w`` defaults to the full budget, which is optimal; other values are
    accepted so the effect of backing off can be examined.
    """
    if not target_rate > 0:
        raise ValueError("target_rate must be positive")
    w_hi = max_band_at_floor(scn, gain, power_w)

    def f(w):
        return user_rate(scn, gain, w, power_w) - target_rate

    if f(w_hi) < 0:
        raise InfeasibleUser(
            f"user with gain {gain:.4g} cannot deliver {target_rate:.6g} suts/s above the similarity floor"
        )
    # f extends continuously to f(0) = -target_rate
    w_lo = w_hi * 1e-9
    while f(w_lo) > 0:
        w_lo *= 1e-3
    if f(w_hi) == 0:
        return w_hi
    return bisect(f, w_lo, w_hi, xtol=w_hi * 1e-17, rtol=4 * 2.0**-52, maxiter=500)


def fdma_boundary_point(scn: Scenario, target_rate: float) -> FdmaAllocation:
    """Highest bit rate under FDMA when every semantic user delivers ``target_rate``."""
    if target_rate < 0:
        raise ValueError("target_rate must be non-negative")
    n = scn.n_sem
    w = scn.bandwidth_hz
    P = scn.p_max_watt
    if target_rate == 0:
        w_sem = (0.0,) * n
        p_sem = (0.0,) * n
    else:
        try:
            w_sem = tuple(min_bandwidth_user(scn, g, target_rate) for g in scn.gains_sem)
        except InfeasibleUser as exc:
            raise InfeasiblePoint(str(exc)) from exc
        p_sem = (P,) * n
    used = math.fsum(w_sem)
    if used > w * (1.0 + 1e-12):
        raise InfeasiblePoint(f"semantic users need {used:.6g} Hz of a {w:.6g} Hz band")
    w_bit = max(w - used, 0.0)
    if w_bit > 0:
        bit_rate = w_bit * math.log2(1.0 + P * scn.gain_bit / (w_bit * _noise_density_w(scn)))
    else:
        bit_rate = 0.0
    return FdmaAllocation(
        s_rate=float(target_rate), w_sem=w_sem, w_bit=w_bit, p_sem=p_sem, p_bit=P, bit_rate=bit_rate
    )
