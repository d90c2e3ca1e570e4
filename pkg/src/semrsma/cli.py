"""Command-line front end.

Every command reads a YAML config, writes one CSV, one plot and a ``run.json``
into the output directory, and exits 0 on success or 2 on configuration
errors. CSV files start with a ``# config_sha256:`` comment line followed by
the header; numbers carry 12 significant digits so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, DomainError, FitError, PointInfeasible
from .region import (
    default_s_grid,
    hull_value,
    regenerate,
    sweep_schemes,
    sweep_threshold,
    sweep_users,
    timeshare_hull,
)
from .rsma import sca_rsma, two_bit_user_baseline
from .scenario import RNG_ALGORITHM, Scenario
from .semantic_model import fit_logistic, read_samples_csv, similarity

REGION_HEADER = ["scheme", "s_suts_per_s", "bit_rate_bps", "q", "active_splits", "iterations", "feasible"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence], digest: str) -> None:
    buf = io.StringIO()
    buf.write(f"# config_sha256: {digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def write_report(path: Path, cfg: RunConfig | None, command: str, extra: dict, digest: str) -> None:
    report = {
        "command": command,
        "version": __version__,
        "config_sha256": digest,
        "rng": RNG_ALGORITHM,
        "config": cfg.to_dict() if cfg is not None else None,
    }
    report.update(extra)
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def _plot(path: Path, digest: str, draw) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = digest
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    draw(ax)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    meta = {"Date": None} if path.suffix == ".svg" else {}
    if path.suffix in (".svg", ".pdf"):
        meta["Description" if path.suffix == ".svg" else "Subject"] = f"config_sha256 {digest}"
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def _outdir(cfg: RunConfig, override: str | None) -> Path:
    out = Path(override if override is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(cfg: RunConfig, scn: Scenario) -> list[float]:
    if cfg.sweep.s_grid_suts_per_s is not None:
        return sorted(set([0.0] + list(cfg.sweep.s_grid_suts_per_s)))
    return [float(v) for v in default_s_grid(scn, cfg.sweep.n_points)]


def run_region(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    scn = cfg.build_scenario()
    grid = _grid(cfg, scn)
    bds = sweep_schemes(scn, grid, cfg.sweep.schemes, settings=cfg.sca_settings(), jobs=jobs)
    hull_inputs = [bds[s] for s in ("fdma", "rsma") if s in bds] or list(bds.values())
    hull = timeshare_hull(hull_inputs)
    digest = cfg.digest()
    rows = []
    warnings = 0
    for scheme in cfg.sweep.schemes:
        bd = bds[scheme]
        for p in bd.points:
            rows.append([scheme, p.s_rate, p.b_rate, p.q, p.active_splits, p.iterations, True])
        for s in bd.infeasible:
            rows.append([scheme, s, None, None, None, None, False])
            warnings += s != 0.0
    s_end = hull.points[-1].s_rate
    for s in grid:
        if s <= s_end:
            rows.append(["timeshare", s, float(hull_value(hull, s)), None, None, 0, True])
    write_csv(out / "region.csv", REGION_HEADER, rows, digest)
    if cfg.output.plots:
        def draw(ax):
            for scheme, bd in bds.items():
                ax.plot(bd.s / 1e6, bd.b / 1e6, marker=".", label=scheme.upper())
            ax.plot(hull.s / 1e6, hull.b / 1e6, "k:", label="time sharing")
            ax.set_xlabel("semantic rate (Msuts/s)")
            ax.set_ylabel("bit rate (Mbit/s)")
            ax.set_title(f"rate regions, {scn.n_sem} semantic user(s)")

        _plot(out / f"region.{cfg.output.plot_format}", digest, draw)
    extra = {
        "scenario": scn.to_dict(),
        "scenario_digest": scn.digest(),
        "s_grid": grid,
        "infeasible_points": warnings,
        "hull_vertices": [[p.s_rate, p.b_rate] for p in hull.points],
    }
    write_report(out / "run.json", cfg, "region", extra, digest)
    return {"boundaries": bds, "hull": hull, "warnings": warnings}


def run_sweep_users(cfg: RunConfig, out: Path, jobs: int = 1) -> list:
    base = cfg.build_scenario()
    rows = sweep_users(base, cfg.sweep.user_counts, cfg.sweep.fixed_s_suts_per_s, cfg.sweep.schemes,
                       settings=cfg.sca_settings(), jobs=jobs)
    digest = cfg.digest()
    header = ["scheme", "n_semantic_users", "bit_rate_bps", "q", "active_splits", "feasible"]
    write_csv(out / "users.csv", header,
              [[r.scheme, r.n_sem, r.bit_rate, r.q, r.active_splits, r.bit_rate is not None] for r in rows], digest)
    if cfg.output.plots:
        def draw(ax):
            for scheme in cfg.sweep.schemes:
                pts = [(r.n_sem, r.bit_rate / 1e6) for r in rows if r.scheme == scheme and r.bit_rate is not None]
                if pts:
                    ax.plot(*zip(*pts), marker="o", label=scheme.upper())
            ax.set_xlabel("number of semantic users")
            ax.set_ylabel("bit rate (Mbit/s)")

        _plot(out / f"users.{cfg.output.plot_format}", digest, draw)
    write_report(out / "run.json", cfg, "sweep-users", {"fixed_s_suts_per_s": cfg.sweep.fixed_s_suts_per_s}, digest)
    return rows


def run_sweep_threshold(cfg: RunConfig, out: Path, jobs: int = 1):
    base = cfg.build_scenario(cfg.sweep.threshold_users)
    study = sweep_threshold(base, cfg.sweep.thresholds, schemes=cfg.sweep.schemes,
                            settings=cfg.sca_settings(), jobs=jobs)
    digest = cfg.digest()
    rows = []
    for v in study.thresholds:
        for scheme, bd in study.boundaries[v].items():
            rows.extend([v, scheme, p.s_rate, p.b_rate, True] for p in bd.points)
            rows.extend([v, scheme, s, None, False] for s in bd.infeasible)
    write_csv(out / "threshold.csv", ["s_th", "scheme", "s_suts_per_s", "bit_rate_bps", "feasible"], rows, digest)
    if cfg.output.plots:
        def draw(ax):
            styles = ["-", "--", "-."]
            for i, v in enumerate(study.thresholds):
                for scheme, bd in study.boundaries[v].items():
                    ax.plot(bd.s / 1e6, bd.b / 1e6, styles[i % 3], label=f"{scheme.upper()} s_th={v:g}")
            ax.set_xlabel("semantic rate (Msuts/s)")
            ax.set_ylabel("bit rate (Mbit/s)")

        _plot(out / f"threshold.{cfg.output.plot_format}", digest, draw)
    imps = {f"{v:g}": study.improvements.get(v) for v in study.thresholds}
    write_report(out / "run.json", cfg, "sweep-threshold", {"improvement": imps, "s_grid": study.s_grid}, digest)
    return study


def run_alpha(cfg: RunConfig, out: Path, jobs: int = 1) -> list:
    """Split fraction of the bit user in two settings.

    The two-bit-user panel pairs the scenario's bit user (split) with its first
    semantic user acting as a plain bit user; the coexistence panel sweeps the
    semantic rate with one semantic user.
    """
    scn = regenerate(cfg.build_scenario(), 1) if cfg.scenario.gain_bit is None else cfg.build_scenario(1)
    settings = cfg.sca_settings()
    w, noise, P = scn.bandwidth_hz, scn.noise_w, scn.p_max_watt
    g1, g2 = scn.gain_bit, scn.gains_sem[0]
    r2_max = w * np.log2(1.0 + P * g2 / noise)
    rows = []
    for r2 in np.linspace(0.0, r2_max, cfg.sweep.alpha_points):
        r1, alpha = two_bit_user_baseline(g1, g2, P, w, noise, float(r2), settings=settings)
        rows.append(["two_bit_user", float(r2), r1, alpha])
    for s in _grid(cfg, scn):
        try:
            a = sca_rsma(scn, s, settings=settings)
        except (PointInfeasible, DomainError):
            break
        rows.append(["coexistence", s, a.bit_rate, a.split_fractions[0]])
    digest = cfg.digest()
    write_csv(out / "alpha.csv", ["panel", "x", "rate_bps", "alpha"], rows, digest)
    if cfg.output.plots:
        def draw(ax):
            two = [(r[1] / 1e6, r[3]) for r in rows if r[0] == "two_bit_user"]
            co = [(r[1] / 1e6, r[3]) for r in rows if r[0] == "coexistence"]
            ax.plot(*zip(*two), marker="o", label="two bit users, x = R2 (Mbit/s)")
            ax.plot(*zip(*co), marker=".", label="coexistence, x = S (Msuts/s)")
            ax.set_xlabel("x")
            ax.set_ylabel("alpha")

        _plot(out / f"alpha.{cfg.output.plot_format}", digest, draw)
    write_report(out / "run.json", cfg, "alpha", {"scenario": scn.to_dict()}, digest)
    return rows


def run_fit(samples: str, k: int, out: Path, plot_format: str = "svg", plots: bool = True):
    import hashlib

    raw = Path(samples).read_bytes()
    digest = hashlib.sha256(raw + f"|k={k}".encode()).hexdigest()
    data = read_samples_csv(samples)
    fit = fit_logistic(data, k)
    p = fit.params
    write_csv(out / "fit.csv", ["k", "a1", "a2", "c1_per_db", "c2", "mse"],
              [[k, p.a1, p.a2, p.c1, p.c2, fit.mse]], digest)
    if plots:
        arr = np.asarray(data, dtype=float)

        def draw(ax):
            ax.plot(arr[:, 0], arr[:, 1], "o", label="samples")
            xs = np.linspace(arr[:, 0].min(), arr[:, 0].max(), 200)
            ax.plot(xs, similarity(p, xs), "-", label="fitted logistic")
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel("sentence similarity")

        _plot(out / f"fit.{plot_format}", digest, draw)
    extra = {"samples": str(samples), "k": k, "mse": fit.mse, "n_evals": fit.n_evals,
             "logistic": {"a1": p.a1, "a2": p.a2, "c1_per_db": p.c1, "c2": p.c2}}
    write_report(out / "run.json", None, "fit", extra, digest)
    return fit


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semrsma", description="Rate regions of coexisting semantic and bit users.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run configuration (default: shipped defaults)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--seed", type=int, help="channel seed, overrides scenario.seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    for name, text in [
        ("region", "rate-region boundaries of every scheme plus the time-sharing hull"),
        ("sweep-users", "bit rate against the number of semantic users at a fixed semantic rate"),
        ("sweep-threshold", "regions for several similarity thresholds and RSMA improvement statistics"),
        ("alpha", "split fraction of the bit user"),
    ]:
        common(sub.add_parser(name, help=text))
    fp = sub.add_parser("fit", help="fit the similarity logistic to (snr_db, similarity) samples")
    fp.add_argument("samples", help="CSV with header snr_db,similarity")
    fp.add_argument("--k", type=int, default=8, help="semantic symbols per word of the samples")
    fp.add_argument("--out", default="out", help="output directory")
    fp.add_argument("--plot-format", default="svg", choices=["svg", "png", "pdf"])
    return ap


RUNNERS = {
    "region": run_region,
    "sweep-users": run_sweep_users,
    "sweep-threshold": run_sweep_threshold,
    "alpha": run_alpha,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            fit = run_fit(args.samples, args.k, out, args.plot_format)
            print(f"fit: mse={fit.mse:.3g} -> {out / 'fit.csv'}")
            return 0
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        out = _outdir(cfg, args.out)
        result = RUNNERS[args.command](cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"semrsma: config error: {exc}", file=sys.stderr)
        return 2
    except (FitError, OSError, ValueError) as exc:
        print(f"semrsma: error: {exc}", file=sys.stderr)
        return 2 if args.command == "fit" else 1
    if args.command == "region" and result["warnings"]:
        print(f"semrsma: warning: {result['warnings']} infeasible grid point(s) marked in region.csv", file=sys.stderr)
    print(f"semrsma {args.command}: wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
