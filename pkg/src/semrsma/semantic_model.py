"""Sentence-similarity model and the SINR thresholds it induces.

Similarity is a generalized logistic in the received SNR expressed in dB::

    eps(x) = a1 + (a2 - a1) / (1 + exp(-(c1 * x + c2)))

and the semantic rate of a user occupying ``bandwidth_hz`` is
``bandwidth_hz * i_per_l / k * eps``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import bisect, least_squares
from scipy.special import expit

from .errors import DomainError, FitError, InfeasibleRate

# absolute tolerance (dB) of every logistic inversion done by bisection
BISECT_XTOL_DB = 1e-10


def db_to_linear(x_db):
    out = 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    """Convert a power ratio to dB; zero maps to ``-inf``."""
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LogisticParams:
    """Coefficients of the similarity curve for one symbols-per-word value ``k``."""

    a1: float
    a2: float
    c1: float
    c2: float
    k: int = 8

    def __post_init__(self):
        if not (0.0 <= self.a1 < self.a2 <= 1.0):
            raise DomainError(f"need 0 <= a1 < a2 <= 1, got a1={self.a1}, a2={self.a2}")
        if not self.c1 > 0:
            raise DomainError(f"growth rate c1 must be positive, got {self.c1}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")


@dataclass(frozen=True)
class SemanticConfig:
    k: int = 8
    i_per_l: float = 1.0
    s_th: float = 0.8

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        if not self.i_per_l > 0:
            raise DomainError(f"i_per_l must be positive, got {self.i_per_l}")

    def check(self, params: LogisticParams) -> None:
        """Raise unless the threshold lies inside the curve's range."""
        if params.k != self.k:
            raise DomainError(f"logistic parameters are for k={params.k}, config has k={self.k}")
        if not (params.a1 <= self.s_th <= params.a2):
            raise DomainError(
                f"s_th={self.s_th} outside [a1, a2] = [{params.a1}, {params.a2}]"
            )

    def rate_scale(self, bandwidth_hz: float) -> float:
        """Semantic rate per unit similarity, in suts/s."""
        return bandwidth_hz * self.i_per_l / self.k


def similarity(params: LogisticParams, snr_db):
    """Sentence similarity at ``snr_db``; accepts scalars or arrays."""
    z = params.c1 * np.asarray(snr_db, dtype=float) + params.c2
    out = params.a1 + (params.a2 - params.a1) * expit(z)
    return float(out) if np.ndim(out) == 0 else out


def semantic_rate(cfg: SemanticConfig, params: LogisticParams, bandwidth_hz: float, snr_db) -> float:
    if bandwidth_hz < 0:
        raise DomainError("bandwidth must be non-negative")
    if bandwidth_hz == 0:
        return 0.0
    return cfg.rate_scale(bandwidth_hz) * similarity(params, snr_db)


def gamma_sem(params: LogisticParams, s_th: float) -> float:
    """SNR (dB) at which the similarity equals ``s_th``."""
    if not (params.a1 < s_th < params.a2):
        raise DomainError(
            f"threshold {s_th} unreachable: must lie strictly inside ({params.a1}, {params.a2})"
        )
    return -(params.c2 + math.log((params.a2 - params.a1) / (s_th - params.a1) - 1.0)) / params.c1


def _invert_by_bisection(params: LogisticParams, target: float, lo: float) -> float:
    # grow the bracket until the curve passes the target
    step = 10.0
    hi = lo + step
    while similarity(params, hi) < target:
        step *= 2.0
        hi = lo + step
    return bisect(lambda x: similarity(params, x) - target, lo, hi, xtol=BISECT_XTOL_DB, maxiter=400)


def gamma_for_rate(
    cfg: SemanticConfig, params: LogisticParams, bandwidth_hz: float, target_rate: float
) -> float:
    """Smallest SNR (dB) meeting both the similarity threshold and ``target_rate``.

    The branch boundary is ``s_th * bandwidth_hz * i_per_l / k``; at or below it
    the similarity threshold dominates and ``gamma_sem`` is returned.
    """
    scale = cfg.rate_scale(bandwidth_hz)
    g_sem = gamma_sem(params, cfg.s_th)
    if target_rate <= cfg.s_th * scale:
        return g_sem
    if target_rate >= params.a2 * scale:
        raise InfeasibleRate(
            f"target {target_rate:.6g} suts/s not below the ceiling {params.a2 * scale:.6g} suts/s"
        )
    x = _invert_by_bisection(params, target_rate / scale, g_sem)
    return max(x, g_sem)


@dataclass(frozen=True)
class LogisticFit:
    params: LogisticParams
    mse: float
    n_evals: int


def _initial_guess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # asymptotes just outside the data range, then a linear fit of the logit
    span = y.max() - y.min()
    a1 = max(0.0, y.min() - 0.05 * span)
    a2 = min(1.0, y.max() + 0.05 * span)
    if a2 - a1 < 1e-9:
        a1, a2 = y.min() - 0.05 * span, y.max() + 0.05 * span
    frac = np.clip((y - a1) / (a2 - a1), 1e-6, 1 - 1e-6)
    z = np.log(frac / (1 - frac))
    c1, c2 = np.polyfit(x, z, 1)
    if c1 <= 0:
        c1 = 4.0 / (x.max() - x.min())
        c2 = -c1 * np.median(x)
    return np.array([a1, a2, c1, c2])


def fit_logistic(samples: Sequence[tuple[float, float]], k: int) -> LogisticFit:
    """Least-squares fit of the similarity curve to ``(snr_db, similarity)`` samples.

    Starts from asymptotes bracketing the data and a linear regression of the
    logit, then runs Levenberg-Marquardt (damped Gauss-Newton) on the squared
    residuals.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 4:
        raise FitError("need at least 4 (snr_db, similarity) pairs")
    x, y = data[:, 0], data[:, 1]
    if not np.all(np.isfinite(data)):
        raise FitError("samples contain non-finite values")
    if np.any((y < 0) | (y > 1)):
        raise FitError("similarities must lie in [0, 1]")
    if np.unique(x).size < 2:
        raise FitError("need at least two distinct SNR values")
    if np.ptp(y) <= 1e-12:
        raise FitError("similarity is constant; the curve is not identifiable")

    def residual(theta):
        a1, a2, c1, c2 = theta
        return a1 + (a2 - a1) * expit(c1 * x + c2) - y

    sol = least_squares(residual, _initial_guess(x, y), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    a1, a2, c1, c2 = sol.x
    if c1 < 0:
        # the curve is symmetric under (a1, a2, c1, c2) -> (a2, a1, -c1, -c2)
        a1, a2, c1, c2 = a2, a1, -c1, -c2
    if not c1 > 0:
        raise FitError("fitted growth rate is not positive; data are not increasing")
    a1 = min(max(a1, 0.0), 1.0)
    a2 = min(max(a2, 0.0), 1.0)
    try:
        params = LogisticParams(a1=float(a1), a2=float(a2), c1=float(c1), c2=float(c2), k=int(k))
    except DomainError as exc:
        raise FitError(f"fit left the admissible parameter range: {exc}") from exc
    mse = float(np.mean(residual([a1, a2, c1, c2]) ** 2))
    return LogisticFit(params=params, mse=mse, n_evals=int(sol.nfev))


def read_samples_csv(path) -> list[tuple[float, float]]:
    """Load fitting samples from a two-column CSV with header ``snr_db,similarity``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["snr_db", "similarity"]:
            raise FitError(f"{path}: expected header 'snr_db,similarity', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise FitError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise FitError(f"{path}:{lineno}: {exc}") from exc
    return rows
