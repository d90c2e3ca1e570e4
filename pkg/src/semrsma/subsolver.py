"""Small dense solver for the convexified power-allocation subproblems.

Every subproblem has the form::

    maximize    sum_i  weight_i * log2(1 + x[var_i])
    subject to  A @ x <= b,   lo <= x <= hi

It is solved by a primal log-barrier method (damped Newton centering, barrier
weight multiplied by ``mu`` per outer step). A strictly feasible start comes
from a phase-I linear program that minimizes the largest scaled constraint
violation; when the feasible set has no interior the right-hand sides are
widened by a margin below ``1e-9`` so the barrier is defined. When the objective
has a single log term it is monotone in one variable and the problem is solved
as a linear program instead.

Fixed numerical choices: rows are scaled to unit infinity norm, initial barrier
weight ``t0 = 1``, ``mu = 20``, Armijo backtracking with ``alpha = 0.01`` and
``beta = 0.5``, step capped at 99% of the distance to the boundary.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, nnls

LN2 = math.log(2.0)


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITER_LIMIT = "IterLimit"


@dataclass
class ConvexSubproblem:
    n_vars: int
    log_terms: list[tuple[int, float]]
    A: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.n_vars)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.n_vars,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.n_vars,)).copy()
        self.log_terms = [(int(i), float(w)) for i, w in self.log_terms]
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("A and b have mismatched row counts")
        for i, w in self.log_terms:
            if not 0 <= i < self.n_vars:
                raise ValueError(f"log term index {i} out of range")
            if not w > 0:
                raise ValueError(f"log term weight must be positive, got {w}")
            if not self.lo[i] >= 0:
                raise ValueError(f"variable {i} carries a log term and needs lo >= 0")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound above upper bound")

    @classmethod
    def from_rows(cls, n_vars, log_terms, rows: Sequence[tuple[Sequence[float], float]], lo, hi):
        A = np.array([r[0] for r in rows], dtype=float).reshape(-1, n_vars)
        b = np.array([r[1] for r in rows], dtype=float)
        return cls(n_vars, list(log_terms), A, b, lo, hi)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(w * math.log2(1.0 + x[i]) for i, w in self.log_terms))

    def to_json(self) -> str:
        def enc(v):
            return [None if not math.isfinite(e) else float(e) for e in v]

        return json.dumps(
            {
                "n_vars": self.n_vars,
                "log_terms": self.log_terms,
                "A": self.A.tolist(),
                "b": self.b.tolist(),
                "lo": enc(self.lo),
                "hi": enc(self.hi),
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "ConvexSubproblem":
        d = json.loads(text)
        # non-finite bounds are stored as null
        lo = [-math.inf if e is None else e for e in d["lo"]]
        hi = [math.inf if e is None else e for e in d["hi"]]
        A = np.array(d["A"], dtype=float).reshape(-1, d["n_vars"])
        return cls(d["n_vars"], [tuple(t) for t in d["log_terms"]], A, d["b"], lo, hi)

    def dump(self, path) -> None:
        """Write the subproblem to a JSON text file for offline inspection."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


@dataclass(frozen=True)
class SolverSettings:
    rel_tol: float = 1e-8
    feas_tol: float = 1e-9
    max_barrier_steps: int = 500
    mu: float = 20.0
    newton_tol: float = 1e-11


@dataclass
class SubSolution:
    x: np.ndarray
    objective: float
    status: Status
    kkt_residual: float = math.inf
    newton_steps: int = 0
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def check_feasible(sp: ConvexSubproblem, x) -> float:
    """Largest constraint or bound violation, each row scaled by ``max(1, max|a|)``."""
    x = np.asarray(x, dtype=float)
    worst = 0.0
    if sp.A.shape[0]:
        scale = np.maximum(1.0, np.max(np.abs(sp.A), axis=1))
        worst = max(worst, float(np.max((sp.A @ x - sp.b) / scale)))
    worst = max(worst, float(np.max(sp.lo - x)), float(np.max(x - sp.hi)))
    return max(worst, 0.0)


def _stack_rows(sp: ConvexSubproblem, keep: np.ndarray, x_fixed: np.ndarray):
    """All inequalities on the free variables as scaled rows ``G z <= h``."""
    A = sp.A[:, keep]
    b = sp.b - sp.A[:, ~keep] @ x_fixed[~keep]
    n = int(keep.sum())
    eye = np.eye(n)
    lo, hi = sp.lo[keep], sp.hi[keep]
    fin_hi = np.isfinite(hi)
    fin_lo = np.isfinite(lo)
    G = np.vstack([A, eye[fin_hi], -eye[fin_lo]])
    h = np.concatenate([b, hi[fin_hi], -lo[fin_lo]])
    norms = np.max(np.abs(G), axis=1) if G.shape[0] else np.zeros(0)
    empty = norms == 0
    if np.any(empty & (h < 0)):
        return None, None
    G, h, norms = G[~empty], h[~empty], norms[~empty]
    return G / norms[:, None], h / norms


def _phase_one(G: np.ndarray, h: np.ndarray):
    """Minimize the largest violation ``max(G z - h)``; returns (z, s)."""
    m, n = G.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([G, -np.ones((m, 1))])
    bounds = [(None, None)] * n + [(-1.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=h, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        return None, math.inf
    z = res.x[:n]
    return z, float(np.max(G @ z - h)) if m else -1.0


def _solve_lp(sp, G, h, keep, x_fixed, idx_free, weight, settings) -> SubSolution:
    n = G.shape[1]
    c = np.zeros(n)
    c[idx_free] = -1.0
    res = linprog(c, A_ub=G, b_ub=h, bounds=[(None, None)] * n, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    x = x_fixed.copy()
    if res.status == 2:
        return SubSolution(x, -math.inf, Status.INFEASIBLE)
    if res.status != 0:
        return SubSolution(x, -math.inf, Status.ITER_LIMIT, info={"message": res.message})
    x[keep] = res.x
    lam = -np.asarray(res.ineqlin.marginals)
    stat = np.max(np.abs(c + G.T @ lam)) if n else 0.0
    slack = h - G @ res.x
    comp = float(np.max(np.abs(lam * slack))) if lam.size else 0.0
    kkt = max(float(stat), comp)
    return SubSolution(x, sp.objective(x), Status.OPTIMAL, kkt, 0, {"method": "lp"})


def solve(sp: ConvexSubproblem, settings: SolverSettings = SolverSettings(), x_hint=None) -> SubSolution:
    """Maximize the log-sum objective of ``sp``; see the module docstring."""
    n = sp.n_vars
    fixed = (sp.hi - sp.lo) <= 1e-15 * np.maximum(1.0, np.abs(sp.lo))
    keep = ~fixed
    x_fixed = np.where(fixed, sp.lo, 0.0)
    G, h = _stack_rows(sp, keep, x_fixed)
    if G is None:
        return SubSolution(x_fixed, -math.inf, Status.INFEASIBLE)
    free_index = -np.ones(n, dtype=int)
    free_index[keep] = np.arange(int(keep.sum()))
    terms = [(free_index[i], w) for i, w in sp.log_terms if keep[i]]

    if int(keep.sum()) == 0:
        viol = check_feasible(sp, x_fixed)
        status = Status.OPTIMAL if viol <= settings.feas_tol else Status.INFEASIBLE
        return SubSolution(x_fixed, sp.objective(x_fixed), status, 0.0)

    if len(terms) == 1:
        return _solve_lp(sp, G, h, keep, x_fixed, terms[0][0], terms[0][1], settings)

    z, s_max = _phase_one(G, h)
    if z is None or s_max > settings.feas_tol:
        return SubSolution(x_fixed, -math.inf, Status.INFEASIBLE, info={"phase1_violation": s_max})
    if x_hint is not None:
        zh = np.asarray(x_hint, dtype=float)[keep]
        if np.all(G @ zh - h < s_max):
            z = zh
            s_max = float(np.max(G @ z - h))
    margin = 0.0
    if s_max > -1e-9:
        # no usable interior: widen every row slightly so the barrier is defined
        margin = max(s_max, 0.0) + 1e-10
        h = h + margin
    return _barrier(sp, G, h, z, terms, keep, x_fixed, settings, margin)


def _barrier(sp, G, h, z, terms, keep, x_fixed, settings, margin) -> SubSolution:
    m, n = G.shape
    idx = np.array([i for i, _ in terms], dtype=int)
    wts = np.array([w for _, w in terms], dtype=float)

    def fgrad(z):
        g = np.zeros(n)
        np.add.at(g, idx, wts / ((1.0 + z[idx]) * LN2))
        return g

    def fhess_diag(z):
        d = np.zeros(n)
        np.add.at(d, idx, -wts / ((1.0 + z[idx]) ** 2 * LN2))
        return d

    def fval(z):
        return float(np.sum(wts * np.log1p(z[idx]))) / LN2

    # slacks are carried explicitly and updated by G @ step, which keeps their
    # relative accuracy when they are much smaller than the right-hand sides
    slack = h - G @ z
    t = 1.0
    steps = 0
    while True:
        stalled = 0
        while True:
            inv = 1.0 / slack
            gf = fgrad(z)
            grad = -t * gf + G.T @ inv
            H = (G.T * inv**2) @ G - t * np.diag(fhess_diag(z))
            H[np.diag_indices_from(H)] *= 1.0 + 1e-14
            try:
                dz = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(H, grad, rcond=None)[0]
            dec = float(-grad @ dz)
            if dec / 2.0 <= settings.newton_tol:
                stalled += 1
                if dec <= 1e-22 or stalled > 3:
                    break
            steps += 1
            if steps > settings.max_barrier_steps:
                x = x_fixed.copy()
                x[keep] = z
                return SubSolution(x, sp.objective(x), Status.ITER_LIMIT, math.inf, steps)
            Gd = G @ dz
            pos = Gd > 0
            step = 1.0
            if np.any(pos):
                step = min(1.0, 0.99 * float(np.min(slack[pos] / Gd[pos])))
            neg = dz[idx] < 0
            if np.any(neg):
                step = min(step, 0.99 * float(np.min((1.0 + z[idx][neg]) / -dz[idx][neg])))
            if dec < 1e-8:
                # inside the quadratic-convergence region barrier values are
                # dominated by roundoff, so the full step is taken
                z = z + step * dz
                slack = slack - step * Gd
                continue
            phi0 = -t * fval(z) - float(np.sum(np.log(slack)))
            while step >= 1e-16:
                sn = slack - step * Gd
                zn = z + step * dz
                if np.all(sn > 0) and np.all(1.0 + zn[idx] > 0):
                    phi = -t * fval(zn) - float(np.sum(np.log(sn)))
                    if phi <= phi0 - 0.01 * step * dec:
                        break
                step *= 0.5
            if step < 1e-16:
                break
            z, slack = zn, sn
        f = fval(z)
        if m / t <= settings.rel_tol * max(1.0, abs(f)) * 0.1:
            break
        t *= settings.mu

    x = x_fixed.copy()
    x[keep] = z
    kkt = _kkt_residual(fgrad(z), G, slack, t, f)
    status = Status.OPTIMAL if kkt <= 1e-6 else Status.ITER_LIMIT
    return SubSolution(x, sp.objective(x), status, kkt, steps, {"method": "barrier", "margin": margin})


def _kkt_residual(gf, G, slack, t, f) -> float:
    """Relative KKT residual at a barrier solution.

    Multipliers of near-active rows are re-estimated by non-negative least
    squares, since ``1 / (t * slack)`` loses accuracy as slacks shrink.
    """
    lam = 1.0 / (t * slack)
    active = slack <= 1e-6 * max(1.0, float(np.max(slack)))
    if np.any(active):
        inactive_part = G[~active].T @ lam[~active]
        lam_a, _ = nnls(G[active].T, gf - inactive_part)
        lam = lam.copy()
        lam[active] = lam_a
    stat = float(np.max(np.abs(gf - G.T @ lam))) / (1.0 + float(np.max(np.abs(gf))))
    comp = float(np.sum(lam * np.abs(slack))) / max(1.0, abs(f))
    return max(stat, comp)
