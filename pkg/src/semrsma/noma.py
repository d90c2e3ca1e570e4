"""NOMA boundary points.

Semantic users are decoded strongest first; the bit user is decoded after
``q`` of them. For each ``q`` the bit rate is maximized by SCA with the
bit-user SINR ratio linearized at the current iterate, and the best ``q`` is
kept.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._sca import ScaSettings, SolveReport, max_bit_power, min_powers, resolve_settings, run_sca
from .errors import PointInfeasible
from .scenario import Scenario
from .semantic_model import db_to_linear, gamma_for_rate
from .subsolver import ConvexSubproblem

__all__ = [
    "NomaAllocation",
    "SolveReport",
    "noma_sinr_sem",
    "noma_sinr_bit",
    "sca_noma",
    "noma_boundary_point",
]

MULTI_START_SCALES = (1.0, 1.5, 2.0)


@dataclass
class NomaAllocation:
    s_rate: float
    p_sem: tuple[float, ...]
    p_bit: float
    q: int
    bit_rate: float
    report: SolveReport


def noma_sinr_sem(scn: Scenario, powers, q: int, j: int) -> float:
    """Linear SINR of semantic user ``j`` (0-based) when the bit user is decoded after ``q`` users.

    ``powers`` lists the semantic powers in decoding order followed by the bit power.
    """
    p_sem, p_bit = powers[: scn.n_sem], powers[scn.n_sem]
    g = scn.gains_sem
    interference = scn.noise_w + sum(p_sem[i] * g[i] for i in range(j + 1, scn.n_sem))
    if j < q:
        interference += p_bit * scn.gain_bit
    return p_sem[j] * g[j] / interference


def noma_sinr_bit(scn: Scenario, powers, q: int) -> float:
    p_sem, p_bit = powers[: scn.n_sem], powers[scn.n_sem]
    g = scn.gains_sem
    interference = scn.noise_w + sum(p_sem[i] * g[i] for i in range(q, scn.n_sem))
    return p_bit * scn.gain_bit / interference


def required_sinr(scn: Scenario, target_rate: float) -> float:
    """Linear SINR every semantic user must reach for ``target_rate``."""
    return db_to_linear(gamma_for_rate(scn.cfg, scn.params, scn.bandwidth_hz, target_rate))


def _silent(scn: Scenario, q: int = 0) -> NomaAllocation:
    rate = scn.single_user_bit_rate()
    rep = SolveReport(objective_trace=[rate], iterations=0, converged=True)
    return NomaAllocation(0.0, (0.0,) * scn.n_sem, scn.p_max_watt, q, rate, rep)


class _NomaModel:
    def __init__(self, scn: Scenario, gamma: float, q: int):
        self.n = scn.n_sem
        self.a = scn.snr_sem
        self.ab = scn.snr_bit
        self.gamma = gamma
        self.q = q
        self.exposure = np.where(np.arange(self.n) < q, self.ab, 0.0)

    def interference_bit(self, xs) -> float:
        return 1.0 + float(np.dot(self.a[self.q:], xs[self.q:]))

    def exact(self, x) -> float:
        xs, xb = x[: self.n], x[self.n]
        return math.log2(1.0 + self.ab * xb / self.interference_bit(xs))

    def start(self, scale: float) -> np.ndarray | None:
        xb_max = max_bit_power(self.a, self.gamma, self.exposure)
        if xb_max < 0:
            return None
        xb = min(0.5, xb_max)
        xs = np.minimum(min_powers(self.a, self.gamma, self.exposure * xb) * scale, 1.0)
        x = np.append(xs, xb)
        return x if self.violation(x) <= 1e-12 else None

    def violation(self, x) -> float:
        """Largest relative shortfall of a semantic SINR below its target."""
        xs, xb = x[: self.n], x[self.n]
        worst = 0.0
        tail = 1.0 + float(np.dot(self.a, xs))
        for j in range(self.n):
            tail -= self.a[j] * xs[j]
            sinr = self.a[j] * xs[j] / (tail + self.exposure[j] * xb)
            worst = max(worst, (self.gamma - sinr) / self.gamma)
        return worst

    def build(self, x0) -> ConvexSubproblem:
        n, a, ab, g, q = self.n, self.a, self.ab, self.gamma, self.q
        nv = n + 2  # semantic powers, bit power, bit SINR
        xb0 = x0[n]
        s0 = self.interference_bit(x0[:n])
        rows = []
        # rho <= ab*xb/s0 - ab*xb0*(I(x) - s0)/s0^2 with I affine in the powers
        r = np.zeros(nv)
        r[n + 1] = 1.0
        r[n] = -ab / s0
        r[q:n] += ab * xb0 / s0**2 * a[q:]
        rows.append((r, ab * xb0 / s0 - ab * xb0 / s0**2))
        for j in range(n):
            r = np.zeros(nv)
            r[j] = -a[j]
            r[j + 1 : n] = g * a[j + 1 :]
            if j < q:
                r[n] = g * ab
            rows.append((r, -g))
        lo = np.zeros(nv)
        hi = np.append(np.ones(n + 1), np.inf)
        return ConvexSubproblem.from_rows(nv, [(n + 1, 1.0)], rows, lo, hi)


def sca_noma(
    scn: Scenario,
    target_rate: float,
    q: int,
    tau: float | None = None,
    settings: ScaSettings | None = None,
    init: np.ndarray | None = None,
) -> NomaAllocation:
    """Maximize the bit rate for decoding position ``q`` by SCA.

    ``init`` optionally gives a starting point ``(p_sem..., p_bit)`` in watts;
    by default the bit user starts at half power with semantic powers meeting
    their SINR targets with equality, rescaled by each multi-start factor.
    """
    if not 0 <= q <= scn.n_sem:
        raise ValueError(f"q must lie in 0..{scn.n_sem}")
    if target_rate == 0:
        return _silent(scn, q)
    settings = resolve_settings(scn, settings, tau)
    gamma = required_sinr(scn, target_rate)
    model = _NomaModel(scn, gamma, q)
    if init is not None:
        starts = [np.asarray(init, dtype=float) / scn.p_max_watt]
    else:
        scales = MULTI_START_SCALES[: max(settings.multi_start, 1)]
        starts = [s for s in (model.start(c) for c in scales) if s is not None]
    if not starts:
        raise PointInfeasible(f"no semantic power allocation meets SINR {gamma:.4g} (q={q})")
    best = None
    for x0 in starts:
        x, rep = run_sca(model.build, model.exact, x0, scn.n_sem + 1, settings, scn.bandwidth_hz)
        val = model.exact(x)
        if best is None or val > best[0] + 1e-12:
            best = (val, x, rep)
    val, x, rep = best
    rep.feasibility_violation = max(model.violation(x), 0.0)
    P = scn.p_max_watt
    return NomaAllocation(
        s_rate=float(target_rate),
        p_sem=tuple(float(v) * P for v in x[: scn.n_sem]),
        p_bit=float(x[scn.n_sem]) * P,
        q=q,
        bit_rate=scn.bandwidth_hz * val,
        report=rep,
    )


def noma_boundary_point(
    scn: Scenario, target_rate: float, tau: float | None = None, settings: ScaSettings | None = None
) -> NomaAllocation:
    """Best NOMA bit rate over all decoding positions of the bit user."""
    if target_rate == 0:
        return _silent(scn)
    best = None
    for q in range(scn.n_sem + 1):
        try:
            alloc = sca_noma(scn, target_rate, q, tau=tau, settings=settings)
        except PointInfeasible:
            continue
        # smallest q wins ties
        if best is None or alloc.bit_rate > best.bit_rate * (1.0 + 1e-9):
            best = alloc
    if best is None:
        raise PointInfeasible(f"no decoding position supports {target_rate:.6g} suts/s")
    return best
