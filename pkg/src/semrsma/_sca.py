"""Successive convex approximation loop shared by the NOMA and RSMA solvers.

Decision vectors are in normalized units: every power is a fraction of the
budget ``P`` and every gain is the full-power SNR ``P g / noise``. The convex
subproblem is rebuilt at each iterate with the ratio constraints linearized
there; its optimum is accepted when the exact (non-linearized) objective does
not drop, otherwise the step toward it is halved until it does. The exact
objective along the accepted iterates is therefore non-decreasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import PointInfeasible
from .subsolver import ConvexSubproblem, SolverSettings, solve


@dataclass
class SolveReport:
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    tau: float = 0.0
    subproblem_kkt: list[float] = field(default_factory=list)
    feasibility_violation: float = 0.0


@dataclass(frozen=True)
class ScaSettings:
    """``tau`` is in bits/s; ``None`` means ``1e-6`` times the bandwidth."""

    tau: float | None = None
    max_iter: int = 200
    max_backtracks: int = 30
    multi_start: int = 3
    solver: SolverSettings = SolverSettings()


def resolve_settings(scn, settings: ScaSettings | None, tau: float | None) -> ScaSettings:
    settings = settings or ScaSettings()
    if tau is None:
        tau = settings.tau if settings.tau is not None else 1e-6 * scn.bandwidth_hz
    if not tau > 0:
        raise ValueError("tau must be positive")
    return replace(settings, tau=float(tau))


def min_powers(a_sem: np.ndarray, gamma: float, extra: np.ndarray) -> np.ndarray:
    """Smallest semantic powers meeting SINR ``gamma`` with equality.

    Users are solved from the last decoded one upward. ``extra[j]`` is the
    bit-user interference seen by user ``j`` on top of noise (normalized).
    """
    n = a_sem.size
    x = np.zeros(n)
    tail = 0.0
    for j in range(n - 1, -1, -1):
        x[j] = gamma * (1.0 + tail + extra[j]) / a_sem[j]
        tail += a_sem[j] * x[j]
    return x


def max_bit_power(a_sem: np.ndarray, gamma: float, exposure: np.ndarray) -> float:
    """Largest bit power (fraction of P) keeping the minimal semantic powers within budget.

    ``exposure[j]`` is the bit-user gain seen by semantic user ``j`` per unit
    bit power; the minimal power vector is affine in the bit power.
    Returns a negative number when even a silent bit user leaves some
    semantic user short.
    """
    base = min_powers(a_sem, gamma, np.zeros_like(a_sem))
    slope = min_powers(a_sem, gamma, exposure) - base
    if np.any(base > 1.0 + 1e-12):
        return -1.0
    limit = 1.0
    for u, v in zip(base, slope):
        if v > 0:
            limit = min(limit, (1.0 - u) / v)
    return max(limit, 0.0)


def run_sca(
    build: Callable[[np.ndarray], ConvexSubproblem],
    exact: Callable[[np.ndarray], float],
    x0: np.ndarray,
    n_powers: int,
    settings: ScaSettings,
    scale: float,
) -> tuple[np.ndarray, SolveReport]:
    """Iterate linearize-and-solve from the feasible point ``x0``.

    ``exact`` returns the true objective in normalized units (bits/s/Hz);
    ``scale`` converts it to the reported unit (bits/s).
    """
    x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    report = SolveReport(tau=settings.tau)
    t_prev = exact(x)
    report.objective_trace.append(scale * t_prev)
    for it in range(1, settings.max_iter + 1):
        sp = build(x)
        sol = solve(sp, settings.solver)
        report.iterations = it
        if not sol.ok:
            if it == 1:
                raise PointInfeasible(f"convex subproblem at the initial point: {sol.status.value}")
            break
        report.subproblem_kkt.append(sol.kkt_residual)
        cand = np.clip(sol.x[:n_powers], 0.0, 1.0)
        t_new = exact(cand)
        step = 1.0
        backtracks = 0
        while t_new < t_prev and backtracks < settings.max_backtracks:
            step *= 0.5
            backtracks += 1
            trial = x + step * (cand - x)
            t_new = exact(trial)
            if t_new >= t_prev:
                cand = trial
        if t_new < t_prev:
            # no ascent along the model direction: the iterate is stationary
            report.converged = True
            break
        x = cand
        report.objective_trace.append(scale * t_new)
        if scale * abs(t_new - t_prev) < settings.tau:
            t_prev = t_new
            report.converged = True
            break
        t_prev = t_new
    return x, report


def log2p(x) -> float:
    return math.log2(1.0 + x)
