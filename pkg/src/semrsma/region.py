"""Rate-region sweeps, the time-sharing envelope and comparative experiments."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._sca import ScaSettings
from .errors import DomainError, SemRsmaError
from .fdma import fdma_boundary_point
from .noma import noma_boundary_point
from .rsma import sca_rsma
from .scenario import Scenario, generate_scenario

SCHEMES = ("fdma", "noma", "rsma")
EPS_FRACTION = 1e-4


@dataclass(frozen=True)
class RatePoint:
    s_rate: float
    b_rate: float
    q: int | None = None
    active_splits: int | None = None
    iterations: int = 0
    split_fractions: tuple[float, ...] | None = None
    objective_trace: tuple[float, ...] = ()
    feasibility_violation: float = 0.0


@dataclass
class RegionBoundary:
    """Feasible boundary points sorted by semantic rate.

    ``infeasible`` lists grid values past the truncation point.
    """

    scheme: str
    points: list[RatePoint]
    metadata: dict = field(default_factory=dict)
    infeasible: list[float] = field(default_factory=list)

    @property
    def s(self) -> np.ndarray:
        return np.array([p.s_rate for p in self.points])

    @property
    def b(self) -> np.ndarray:
        return np.array([p.b_rate for p in self.points])

    def value_at(self, s_rate: float) -> float | None:
        for p in self.points:
            if p.s_rate == s_rate:
                return p.b_rate
        return None


def default_s_grid(scn: Scenario, n: int = 60) -> np.ndarray:
    """Zero, a point just above zero, log spacing up to the plateau edge, then linear up to near the ceiling."""
    if n < 8:
        raise DomainError("grid needs at least 8 points")
    edge = scn.plateau_edge
    ceiling = scn.max_semantic_rate
    eps = EPS_FRACTION * edge
    n_log = (n - 2) * 2 // 5
    n_lin = n - 2 - n_log
    logs = np.logspace(math.log10(eps), math.log10(edge), n_log + 1)[1:]
    logs[-1] = edge
    lins = np.linspace(edge, ceiling * (1.0 - 1e-3), n_lin + 1)[1:]
    return np.concatenate([[0.0, eps], logs, lins])


def boundary_point(
    scn: Scenario,
    scheme: str,
    s_rate: float,
    tau: float | None = None,
    settings: ScaSettings | None = None,
    noma_hint=None,
) -> RatePoint:
    """One boundary point of ``scheme``; raises ``PointInfeasible`` or ``InfeasibleRate`` when out of reach."""
    if scheme == "fdma":
        a = fdma_boundary_point(scn, s_rate)
        return RatePoint(s_rate, a.bit_rate)
    if scheme == "noma":
        a = noma_boundary_point(scn, s_rate, tau=tau, settings=settings)
        r = a.report
        return RatePoint(
            s_rate, a.bit_rate, q=a.q, iterations=r.iterations,
            objective_trace=tuple(r.objective_trace), feasibility_violation=r.feasibility_violation,
        )
    if scheme == "rsma":
        a = sca_rsma(scn, s_rate, tau=tau, settings=settings, noma_hint=noma_hint)
        r = a.report
        return RatePoint(
            s_rate, a.bit_rate, active_splits=a.active_splits, iterations=r.iterations,
            split_fractions=a.split_fractions, objective_trace=tuple(r.objective_trace),
            feasibility_violation=r.feasibility_violation,
        )
    raise ValueError(f"unknown scheme {scheme!r}")


def _grid_task(args) -> dict:
    """All requested schemes at one semantic rate; the NOMA point warm-starts RSMA."""
    scn, schemes, s_rate, tau, settings = args
    out: dict = {}
    noma_alloc = None
    if "noma" in schemes or "rsma" in schemes:
        try:
            noma_alloc = noma_boundary_point(scn, s_rate, tau=tau, settings=settings)
        except SemRsmaError:
            noma_alloc = None
    for scheme in schemes:
        try:
            if scheme == "noma":
                out[scheme] = None if noma_alloc is None else _noma_point(noma_alloc)
            else:
                out[scheme] = boundary_point(scn, scheme, s_rate, tau, settings, noma_hint=noma_alloc)
        except SemRsmaError:
            out[scheme] = None
    return out


def _noma_point(a) -> RatePoint:
    r = a.report
    return RatePoint(
        a.s_rate, a.bit_rate, q=a.q, iterations=r.iterations,
        objective_trace=tuple(r.objective_trace), feasibility_violation=r.feasibility_violation,
    )


def _check_grid(s_grid) -> list[float]:
    grid = [float(s) for s in s_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("s_grid must be strictly increasing")
    if grid and grid[0] < 0:
        raise DomainError("semantic rates must be non-negative")
    if not grid or grid[0] != 0.0:
        grid = [0.0] + grid
    return grid


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map yields in submission order, so results stay in grid order
        return list(pool.map(fn, tasks))


def sweep_schemes(
    scn: Scenario,
    s_grid: Sequence[float],
    schemes: Iterable[str] = SCHEMES,
    tau: float | None = None,
    settings: ScaSettings | None = None,
    jobs: int = 1,
) -> dict[str, RegionBoundary]:
    """Boundaries of several schemes over a common grid, truncated at the first infeasible value."""
    schemes = tuple(schemes)
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    grid = _check_grid(s_grid)
    results = _map(_grid_task, [(scn, schemes, s, tau, settings) for s in grid], jobs)
    meta = {"scenario_digest": scn.digest(), "s_grid": grid}
    out = {}
    for scheme in schemes:
        pts: list[RatePoint] = []
        bad: list[float] = []
        for s, res in zip(grid, results):
            pt = res.get(scheme)
            if bad or pt is None:
                bad.append(s)
            else:
                pts.append(pt)
        out[scheme] = RegionBoundary(scheme, pts, dict(meta), bad)
    return out


def sweep_region(
    scn: Scenario,
    scheme: str,
    s_grid: Sequence[float],
    tau: float | None = None,
    settings: ScaSettings | None = None,
    jobs: int = 1,
) -> RegionBoundary:
    """Boundary of one scheme over ``s_grid``; S=0 is always included."""
    return sweep_schemes(scn, s_grid, (scheme,), tau=tau, settings=settings, jobs=jobs)[scheme]


def _upper_hull(pts: np.ndarray) -> np.ndarray:
    """Upper chain of the convex hull, left to right (monotone chain)."""
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    chain: list[tuple[float, float]] = []
    for x, y in pts[order]:
        if chain and chain[-1][0] == x:
            continue  # same abscissa, lower ordinate
        while len(chain) >= 2:
            (x1, y1), (x2, y2) = chain[-2], chain[-1]
            # drop the middle point unless it lies strictly above the chord
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) >= 0:
                chain.pop()
            else:
                break
        chain.append((float(x), float(y)))
    return np.array(chain)


def timeshare_hull(boundaries: Iterable[RegionBoundary]) -> RegionBoundary:
    """Upper concave envelope of every boundary point plus each boundary's semantic-axis intercept."""
    pts = []
    digests = set()
    for bd in boundaries:
        if not bd.points:
            continue
        pts.extend((p.s_rate, p.b_rate) for p in bd.points)
        # the last semantic rate stays achievable with the bit user silent
        pts.append((bd.points[-1].s_rate, 0.0))
        d = bd.metadata.get("scenario_digest")
        # a previous hull may carry a list of digests
        digests.update([d] if isinstance(d, str) else d or ())
    if not pts:
        raise DomainError("no points to hull")
    hull = _upper_hull(np.array(pts, dtype=float))
    meta = {}
    if digests:
        meta["scenario_digest"] = sorted(digests)[0] if len(digests) == 1 else sorted(digests)
    return RegionBoundary("timeshare", [RatePoint(float(s), float(b)) for s, b in hull], meta)


def hull_value(hull: RegionBoundary, s_rate) -> np.ndarray:
    """Piecewise-linear hull value; zero beyond its last point."""
    return np.interp(s_rate, hull.s, hull.b, right=0.0)


def region_area(bd: RegionBoundary) -> float:
    """Trapezoidal area under a boundary (bit/s times suts/s)."""
    if len(bd.points) < 2:
        return 0.0
    return float(np.trapezoid(bd.b, bd.s))


def improvement(rsma: RegionBoundary, noma: RegionBoundary, fixed_s: float) -> dict:
    """RSMA-over-NOMA gains: relative area and relative bit rate at ``fixed_s``."""
    area_n = region_area(noma)
    area_r = region_area(rsma)
    out = {"area": area_r / area_n - 1.0 if area_n > 0 else math.inf, "fixed_s": fixed_s}
    bn = noma.value_at(fixed_s)
    br = rsma.value_at(fixed_s)
    out["fixed_s_gap"] = br / bn - 1.0 if (bn and br is not None) else None
    return out


@dataclass
class ThresholdStudy:
    thresholds: tuple[float, ...]
    s_grid: list[float]
    boundaries: dict[float, dict[str, RegionBoundary]]
    improvements: dict[float, dict]


def threshold_grid(scn: Scenario, s_th_values: Sequence[float], n: int = 60) -> list[float]:
    """Base grid with every threshold's plateau edge inserted."""
    grid = set(float(v) for v in default_s_grid(scn, n))
    for s_th in s_th_values:
        grid.add(float(scn.with_threshold(s_th).plateau_edge))
    return sorted(grid)


def sweep_threshold(
    base_scn: Scenario,
    s_th_values: Sequence[float],
    s_grid: Sequence[float] | None = None,
    fixed_s: float | None = None,
    schemes: Iterable[str] = SCHEMES,
    tau: float | None = None,
    settings: ScaSettings | None = None,
    jobs: int = 1,
) -> ThresholdStudy:
    """Regions per scheme for each threshold on a shared grid, plus improvement statistics.

    ``fixed_s`` defaults to half of the smallest plateau edge so every
    threshold is evaluated on its plateau.
    """
    values = tuple(float(v) for v in s_th_values)
    grid = list(s_grid) if s_grid is not None else threshold_grid(base_scn, values)
    if fixed_s is None:
        fixed_s = 0.5 * min(base_scn.with_threshold(v).plateau_edge for v in values)
    if fixed_s not in grid:
        grid = sorted(set(grid) | {float(fixed_s)})
    bds, imps = {}, {}
    for v in values:
        scn = base_scn.with_threshold(v)
        bds[v] = sweep_schemes(scn, grid, schemes, tau=tau, settings=settings, jobs=jobs)
        if "noma" in bds[v] and "rsma" in bds[v]:
            imps[v] = improvement(bds[v]["rsma"], bds[v]["noma"], fixed_s)
    return ThresholdStudy(values, grid, bds, imps)


@dataclass(frozen=True)
class UserSweepRow:
    scheme: str
    n_sem: int
    bit_rate: float | None
    q: int | None = None
    active_splits: int | None = None


def _users_task(args):
    base, n, fixed_s, schemes, tau, settings = args
    scn = regenerate(base, n)
    res = _grid_task((scn, schemes, fixed_s, tau, settings))
    rows = []
    for scheme in schemes:
        pt = res.get(scheme)
        rows.append(
            UserSweepRow(
                scheme, n, None if pt is None else pt.b_rate,
                None if pt is None else pt.q, None if pt is None else pt.active_splits,
            )
        )
    return rows


def regenerate(base: Scenario, n_sem: int) -> Scenario:
    """Same seed and physics with ``n_sem`` semantic users; existing draws are kept."""
    if base.path_loss is None:
        raise DomainError("user sweeps need a generated scenario (seed and path loss)")
    return generate_scenario(
        n_sem,
        cfg=base.cfg,
        params=base.params,
        seed=base.seed,
        path_loss=base.path_loss,
        bandwidth_hz=base.bandwidth_hz,
        noise_psd_dbm_hz=base.noise_psd_dbm_hz,
        p_max_watt=base.p_max_watt,
    )


def sweep_users(
    base_scn: Scenario,
    n_values: Sequence[int],
    fixed_s: float,
    schemes: Iterable[str] = SCHEMES,
    tau: float | None = None,
    settings: ScaSettings | None = None,
    jobs: int = 1,
) -> list[UserSweepRow]:
    """Bit rate per scheme per number of semantic users at one semantic rate.

    Infeasible cells carry ``bit_rate=None``.
    """
    schemes = tuple(schemes)
    tasks = [(base_scn, int(n), float(fixed_s), schemes, tau, settings) for n in n_values]
    return [row for rows in _map(_users_task, tasks, jobs) for row in rows]
