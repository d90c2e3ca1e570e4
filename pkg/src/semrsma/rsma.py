"""RSMA boundary points.

The bit user splits its message into ``N_s + 1`` streams decoded in the
interleaved order ``b1, s1, b2, s2, ..., sN, bN+1``: bit stream ``k`` (0-based)
is decoded just before semantic user ``k`` and is interfered by every
semantic user from ``k`` on and every later bit stream. Semantic users are
never split. The sum rate of the bit streams is maximized by SCA with each
stream's SINR ratio linearized at the current iterate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._sca import ScaSettings, SolveReport, max_bit_power, min_powers, resolve_settings, run_sca
from .errors import DomainError, PointInfeasible
from .noma import NomaAllocation, noma_boundary_point, required_sinr
from .scenario import Scenario
from .subsolver import ConvexSubproblem

__all__ = [
    "RsmaAllocation",
    "ACTIVE_FRACTION",
    "rsma_exact_sinrs",
    "sca_rsma",
    "split_fraction_profile",
    "two_bit_user_baseline",
]

# streams below this fraction of P are reported as inactive
ACTIVE_FRACTION = 1e-12


@dataclass
class RsmaAllocation:
    s_rate: float
    p_sem: tuple[float, ...]
    p_bit_split: tuple[float, ...]
    bit_rate: float
    split_fractions: tuple[float, ...]
    active_splits: int
    report: SolveReport


def rsma_exact_sinrs(scn: Scenario, p_sem, p_bit_split) -> tuple[np.ndarray, np.ndarray]:
    """Linear SINRs of the semantic users and of every bit stream."""
    n = scn.n_sem
    p_sem = np.asarray(p_sem, dtype=float)
    p_bit = np.asarray(p_bit_split, dtype=float)
    if p_sem.shape != (n,) or p_bit.shape != (n + 1,):
        raise ValueError(f"expected {n} semantic and {n + 1} bit-stream powers")
    rx_sem = p_sem * np.asarray(scn.gains_sem)
    rx_bit = p_bit * scn.gain_bit
    sem = np.empty(n)
    bit = np.empty(n + 1)
    for k in range(n + 1):
        bit[k] = rx_bit[k] / (scn.noise_w + rx_sem[k:].sum() + rx_bit[k + 1 :].sum())
    for j in range(n):
        sem[j] = rx_sem[j] / (scn.noise_w + rx_sem[j + 1 :].sum() + rx_bit[j + 1 :].sum())
    return sem, bit


def split_fraction_profile(alloc: RsmaAllocation) -> tuple[float, ...]:
    """Share of the bit user's power on each stream; the first entry is α."""
    p = np.asarray(alloc.p_bit_split, dtype=float)
    total = p.sum()
    if not total > 0:
        raise DomainError("bit user has no power to split")
    return tuple(float(v) for v in p / total)


def _count_active(p_bit, p_max: float) -> int:
    return int(sum(v > ACTIVE_FRACTION * p_max for v in p_bit))


class _RsmaModel:
    """Normalized variables ``[x_sem (n), x_bit (n+1), rho (n+1)]``."""

    def __init__(self, scn: Scenario, gamma: float):
        self.n = scn.n_sem
        self.a = scn.snr_sem
        self.ab = scn.snr_bit
        self.gamma = gamma

    def split(self, x):
        return x[: self.n], x[self.n : 2 * self.n + 1]

    def stream_sinrs(self, x) -> np.ndarray:
        xs, xb = self.split(x)
        rs = self.a * xs
        rb = self.ab * xb
        return np.array([rb[k] / (1.0 + rs[k:].sum() + rb[k + 1 :].sum()) for k in range(self.n + 1)])

    def exact(self, x) -> float:
        return float(np.sum(np.log2(1.0 + self.stream_sinrs(x))))

    def violation(self, x) -> float:
        xs, xb = self.split(x)
        rs = self.a * xs
        rb = self.ab * xb
        worst = 0.0
        for j in range(self.n):
            sinr = rs[j] / (1.0 + rs[j + 1 :].sum() + rb[j + 1 :].sum())
            worst = max(worst, (self.gamma - sinr) / self.gamma)
        return max(worst, xb.sum() - 1.0)

    def embed(self, xs, xb_streams) -> np.ndarray:
        return np.concatenate([xs, xb_streams])

    def start_last_stream(self) -> np.ndarray | None:
        """Semantic powers at equality, the most bit power the last stream tolerates, rest on stream 1."""
        exposure = np.full(self.n, self.ab)
        xb_last = max_bit_power(self.a, self.gamma, exposure)
        if xb_last < 0:
            return None
        xs = min_powers(self.a, self.gamma, exposure * xb_last)
        xb = np.zeros(self.n + 1)
        xb[self.n] = xb_last
        xb[0] += 1.0 - xb_last
        return self.embed(np.minimum(xs, 1.0), xb)

    def start_from_noma(self, alloc: NomaAllocation, p_max: float) -> np.ndarray:
        """NOMA order ``q`` is bit stream ``q`` alone; leftover power goes to stream 1 which disturbs nobody."""
        xs = np.asarray(alloc.p_sem) / p_max
        xb = np.zeros(self.n + 1)
        xb[alloc.q] = alloc.p_bit / p_max
        xb[0] += max(1.0 - xb.sum(), 0.0)
        return self.embed(np.clip(xs, 0.0, 1.0), xb)

    def build(self, x0) -> ConvexSubproblem:
        n, a, ab, g = self.n, self.a, self.ab, self.gamma
        nb = n + 1
        nv = n + 2 * nb
        xs0, xb0 = self.split(x0)
        rows = []
        for k in range(nb):
            s0 = 1.0 + float(np.dot(a[k:], xs0[k:])) + ab * float(xb0[k + 1 :].sum())
            c = ab * xb0[k] / s0**2
            r = np.zeros(nv)
            r[n + nb + k] = 1.0
            r[n + k] = -ab / s0
            r[k:n] += c * a[k:]
            r[n + k + 1 : n + nb] += c * ab
            rows.append((r, ab * xb0[k] / s0 - c))
        for j in range(n):
            r = np.zeros(nv)
            r[j] = -a[j]
            r[j + 1 : n] = g * a[j + 1 :]
            r[n + j + 1 : n + nb] = g * ab
            rows.append((r, -g))
        r = np.zeros(nv)
        r[n : n + nb] = 1.0
        rows.append((r, 1.0))
        lo = np.zeros(nv)
        hi = np.concatenate([np.ones(n + nb), np.full(nb, np.inf)])
        logs = [(n + nb + k, 1.0) for k in range(nb)]
        return ConvexSubproblem.from_rows(nv, logs, rows, lo, hi)

    def prune(self, x) -> np.ndarray:
        """Zero out streams left at interior-point residue when that costs nothing measurable."""
        xs, xb = self.split(x)
        base = self.exact(x)
        for k in np.argsort(xb):
            if xb[k] == 0 or xb[k] > 1e-6:
                continue
            trial = x.copy()
            trial[self.n + k] = 0.0
            if self.exact(trial) >= base - 1e-9 * max(base, 1.0):
                x, base = trial, self.exact(trial)
        return x


def _silent(scn: Scenario) -> RsmaAllocation:
    n = scn.n_sem
    rate = scn.single_user_bit_rate()
    split = (0.0,) * n + (scn.p_max_watt,)
    rep = SolveReport(objective_trace=[rate], iterations=0, converged=True)
    return RsmaAllocation(0.0, (0.0,) * n, split, rate, (0.0,) * n + (1.0,), 1, rep)


def sca_rsma(
    scn: Scenario,
    target_rate: float,
    tau: float | None = None,
    settings: ScaSettings | None = None,
    noma_hint: NomaAllocation | None = None,
) -> RsmaAllocation:
    """Maximize the bit user's sum rate over its split streams by SCA.

    The first start puts all tolerable bit power on the last stream. When that
    run ends below the best NOMA point, a second run starts from the NOMA
    allocation embedded as a single stream, so the result never falls below
    NOMA. ``noma_hint`` skips recomputing the NOMA point when the caller
    already has it.
    """
    if target_rate == 0:
        return _silent(scn)
    settings = resolve_settings(scn, settings, tau)
    gamma = required_sinr(scn, target_rate)
    model = _RsmaModel(scn, gamma)
    P = scn.p_max_watt
    first = model.start_last_stream()
    if first is None:
        raise PointInfeasible(f"full semantic power cannot reach SINR {gamma:.4g}")
    n_pow = scn.n_sem + scn.n_sem + 1
    best = None
    try:
        x, rep = run_sca(model.build, model.exact, first, n_pow, settings, scn.bandwidth_hz)
        best = (model.exact(x), x, rep)
    except PointInfeasible:
        pass
    if noma_hint is None:
        try:
            noma_hint = noma_boundary_point(scn, target_rate, tau=settings.tau, settings=settings)
        except PointInfeasible:
            noma_hint = None
    # the NOMA start is only needed when the first run ended below NOMA
    if noma_hint is not None and (best is None or scn.bandwidth_hz * best[0] < noma_hint.bit_rate):
        x, rep = run_sca(
            model.build, model.exact, model.start_from_noma(noma_hint, P), n_pow, settings, scn.bandwidth_hz
        )
        val = model.exact(x)
        if best is None or val > best[0]:
            best = (val, x, rep)
    if best is None:
        raise PointInfeasible(f"no RSMA allocation found for {target_rate:.6g} suts/s")
    _, x, rep = best
    x = model.prune(x)
    rep.feasibility_violation = max(model.violation(x), 0.0)
    xs, xb = model.split(x)
    p_split = tuple(float(v) * P for v in xb)
    total = sum(p_split)
    fractions = tuple(v / total for v in p_split) if total > 0 else (0.0,) * len(p_split)
    return RsmaAllocation(
        s_rate=float(target_rate),
        p_sem=tuple(float(v) * P for v in xs),
        p_bit_split=p_split,
        bit_rate=scn.bandwidth_hz * model.exact(x),
        split_fractions=fractions,
        active_splits=_count_active(p_split, P),
        report=rep,
    )


rsma_boundary_point = sca_rsma


class _TwoUserModel:
    """Variables ``[x11, x12, x2, rho11, rho12]``; decode order x11, x2, x12."""

    def __init__(self, a1: float, a2: float, gamma2: float):
        self.a1, self.a2, self.g2 = a1, a2, gamma2

    def rates(self, x) -> tuple[float, float]:
        x11, x12, x2 = x[:3]
        r11 = math.log2(1.0 + self.a1 * x11 / (1.0 + self.a2 * x2 + self.a1 * x12))
        r12 = math.log2(1.0 + self.a1 * x12)
        return r11, r12

    def exact(self, x) -> float:
        return sum(self.rates(x))

    def consolidate(self, x) -> np.ndarray:
        """Move user 1's power onto its last stream as far as user 2 allows, if R1 does not drop.

        Splits with equal R1 (for instance when user 2 needs no rate) are
        thereby resolved toward the unsplit allocation.
        """
        total = x[0] + x[1]
        cap = total if self.g2 == 0 else min(total, (self.a2 * x[2] / self.g2 - 1.0) / self.a1)
        if cap <= x[1]:
            return x
        trial = x.copy()
        trial[1], trial[0] = cap, total - cap
        base = self.exact(x)
        return trial if self.exact(trial) >= base - 1e-12 * max(base, 1.0) else x

    def build(self, x0) -> ConvexSubproblem:
        a1, a2 = self.a1, self.a2
        s0 = 1.0 + a2 * x0[2] + a1 * x0[1]
        c = a1 * x0[0] / s0**2
        rows = [
            # linearized stream x11 SINR
            (np.array([-a1 / s0, c * a1, c * a2, 1.0, 0.0]), a1 * x0[0] / s0 - c),
            # stream x12 sees noise only
            (np.array([0.0, -a1, 0.0, 0.0, 1.0]), 0.0),
            # user 2 rate with the second stream of user 1 still undecoded
            (np.array([0.0, self.g2 * a1, -a2, 0.0, 0.0]), -self.g2),
            (np.array([1.0, 1.0, 0.0, 0.0, 0.0]), 1.0),
        ]
        lo = np.zeros(5)
        hi = np.array([1.0, 1.0, 1.0, np.inf, np.inf])
        return ConvexSubproblem.from_rows(5, [(3, 1.0), (4, 1.0)], rows, lo, hi)


def two_bit_user_baseline(
    g1: float,
    g2: float,
    p_max: float,
    w: float,
    noise_w: float,
    r2_target: float,
    tau: float | None = None,
    settings: ScaSettings | None = None,
) -> tuple[float, float]:
    """Largest rate of split user 1 while user 2 gets ``r2_target`` bit/s.

    Returns ``(r1_max, alpha)`` with ``alpha`` the share of user 1's power on
    its first-decoded stream.
    """
    if r2_target < 0:
        raise ValueError("r2_target must be non-negative")
    a1 = p_max * g1 / noise_w
    a2 = p_max * g2 / noise_w
    gamma2 = 2.0 ** (r2_target / w) - 1.0
    if a2 < gamma2 * (1.0 - 1e-12):
        raise PointInfeasible(f"user 2 cannot reach {r2_target:.6g} bit/s at full power")
    gamma2 = min(gamma2, a2)
    settings = settings or ScaSettings()
    if tau is None:
        tau = settings.tau if settings.tau is not None else 1e-6 * w
    settings = replace(settings, tau=float(tau))
    model = _TwoUserModel(a1, a2, gamma2)
    # user 2 at full power, user 1's second stream at half of what user 2 tolerates
    x12 = 0.5 * min(1.0, (a2 / gamma2 - 1.0) / a1) if gamma2 > 0 else 0.5
    x0 = np.array([1.0 - x12, x12, 1.0])
    x, _ = run_sca(model.build, model.exact, x0, 3, settings, w)
    x = model.consolidate(x)
    total = x[0] + x[1]
    alpha = float(x[0] / total) if total > 0 else 0.0
    if alpha < ACTIVE_FRACTION:
        alpha = 0.0
    return w * model.exact(x), alpha
