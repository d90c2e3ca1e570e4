"""Run configuration: YAML with nested blocks, unit-suffixed keys and strict validation.

Every key is checked against the dataclass fields of its block; unknown keys
and ill-typed values raise :class:`ConfigError` with the line number of the
offending node.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from ._sca import ScaSettings
from .errors import ConfigError, SemRsmaError
from .scenario import PathLossModel, Scenario, explicit_scenario, generate_scenario
from .semantic_model import LogisticParams, SemanticConfig
from .subsolver import SolverSettings


@dataclass(frozen=True)
class ScenarioBlock:
    bandwidth_hz: float = 1e6
    noise_psd_dbm_hz: float = -140.0
    p_max_watt: float = 0.1
    n_semantic_users: int = 1
    seed: int = 1074
    rho0_db: float = -30.0
    path_loss_exponent: float = 3.0
    distance_m: float = 30.0
    # explicit linear gains bypass the random draw when both are given
    gain_bit: float | None = None
    gains_sem: list[float] | None = None


@dataclass(frozen=True)
class LogisticBlock:
    a1: float = 0.25
    a2: float = 0.96
    c1_per_db: float = 0.3826
    c2: float = 0.0869


@dataclass(frozen=True)
class ModelBlock:
    k: int = 8
    i_per_l: float = 1.0
    s_th: float = 0.8
    logistic: LogisticBlock = field(default_factory=LogisticBlock)


@dataclass(frozen=True)
class SolverBlock:
    tau_bps: float | None = None
    max_sca_iterations: int = 200
    max_barrier_steps: int = 500
    multi_start: int = 3
    rel_tol: float = 1e-8
    feas_tol: float = 1e-9


@dataclass(frozen=True)
class SweepBlock:
    n_points: int = 60
    s_grid_suts_per_s: list[float] | None = None
    schemes: list[str] = field(default_factory=lambda: ["fdma", "noma", "rsma"])
    user_counts: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 7])
    fixed_s_suts_per_s: float = 1e5
    thresholds: list[float] = field(default_factory=lambda: [0.7, 0.8, 0.9])
    threshold_users: int = 4
    alpha_points: int = 20


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    plot_format: str = "svg"
    plots: bool = True


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioBlock = field(default_factory=ScenarioBlock)
    model: ModelBlock = field(default_factory=ModelBlock)
    solver: SolverBlock = field(default_factory=SolverBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, scenario=replace(self.scenario, seed=int(seed)))

    def logistic_params(self) -> LogisticParams:
        lg = self.model.logistic
        return LogisticParams(a1=lg.a1, a2=lg.a2, c1=lg.c1_per_db, c2=lg.c2, k=self.model.k)

    def semantic_config(self) -> SemanticConfig:
        return SemanticConfig(k=self.model.k, i_per_l=self.model.i_per_l, s_th=self.model.s_th)

    def path_loss(self) -> PathLossModel:
        sc = self.scenario
        return PathLossModel(rho0_db=sc.rho0_db, exponent=sc.path_loss_exponent, distance_m=sc.distance_m)

    def build_scenario(self, n_semantic_users: int | None = None) -> Scenario:
        sc = self.scenario
        n = sc.n_semantic_users if n_semantic_users is None else n_semantic_users
        common = dict(
            cfg=self.semantic_config(),
            params=self.logistic_params(),
            bandwidth_hz=sc.bandwidth_hz,
            noise_psd_dbm_hz=sc.noise_psd_dbm_hz,
            p_max_watt=sc.p_max_watt,
        )
        if sc.gain_bit is not None:
            return explicit_scenario(sc.gain_bit, sc.gains_sem[:n], **common)
        return generate_scenario(n, seed=sc.seed, path_loss=self.path_loss(), **common)

    def sca_settings(self) -> ScaSettings:
        so = self.solver
        return ScaSettings(
            tau=so.tau_bps,
            max_iter=so.max_sca_iterations,
            multi_start=so.multi_start,
            solver=SolverSettings(rel_tol=so.rel_tol, feas_tol=so.feas_tol, max_barrier_steps=so.max_barrier_steps),
        )


def _line_index(text: str) -> dict[tuple, int]:
    """Map key paths to 1-based line numbers."""
    out: dict[tuple, int] = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (k.value,)
                out[p] = k.start_mark.line + 1
                walk(v, p)

    if root is not None:
        walk(root, ())
    return out


_SCALARS = {"float": (int, float), "int": (int,), "str": (str,), "bool": (bool,)}


def _coerce(value: Any, annotation: str, where: str):
    opt = annotation.endswith("| None")
    base = annotation.replace("| None", "").strip()
    if value is None:
        if opt:
            return None
        raise ConfigError(f"{where}: value is required")
    if base.startswith("list["):
        inner = base[5:-1]
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list of {inner}")
        return [_coerce(v, inner, f"{where}[{i}]") for i, v in enumerate(value)]
    kinds = _SCALARS.get(base)
    if kinds is None:
        raise ConfigError(f"{where}: unsupported field type {annotation}")
    if isinstance(value, bool) and base != "bool":
        raise ConfigError(f"{where}: expected {base}, got a boolean")
    if not isinstance(value, kinds):
        raise ConfigError(f"{where}: expected {base}, got {type(value).__name__}")
    return float(value) if base == "float" else value


def _build(cls, data: Any, path: tuple, lines: dict):
    where = ".".join(path) or "<root>"
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where} (line {lines.get(path, '?')}): expected a mapping")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            line = lines.get(path + (key,), "?")
            raise ConfigError(f"line {line}: unknown key '{'.'.join(path + (str(key),))}'")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        p = path + (name,)
        sub = _BLOCKS.get(f.type)
        if sub is not None:
            kwargs[name] = _build(sub, value, p, lines)
        else:
            kwargs[name] = _coerce(value, f.type, f"line {lines.get(p, '?')}: {'.'.join(p)}")
    return cls(**kwargs)


_BLOCKS = {
    "ScenarioBlock": ScenarioBlock,
    "LogisticBlock": LogisticBlock,
    "ModelBlock": ModelBlock,
    "SolverBlock": SolverBlock,
    "SweepBlock": SweepBlock,
    "OutputBlock": OutputBlock,
}


def _validate(cfg: RunConfig) -> None:
    sc, sw, so = cfg.scenario, cfg.sweep, cfg.solver
    if sc.n_semantic_users < 1:
        raise ConfigError("scenario.n_semantic_users must be at least 1")
    if sc.seed < 0 or sc.seed >= 2**64:
        raise ConfigError("scenario.seed must be an unsigned 64-bit integer")
    if (sc.gain_bit is None) != (sc.gains_sem is None):
        raise ConfigError("scenario.gain_bit and scenario.gains_sem must be given together")
    if sc.gains_sem is not None and len(sc.gains_sem) < sc.n_semantic_users:
        raise ConfigError("scenario.gains_sem has fewer entries than n_semantic_users")
    bad = [s for s in sw.schemes if s not in ("fdma", "noma", "rsma")]
    if bad:
        raise ConfigError(f"sweep.schemes: unknown scheme(s) {bad}")
    if sw.n_points < 8:
        raise ConfigError("sweep.n_points must be at least 8")
    if any(n < 1 for n in sw.user_counts):
        raise ConfigError("sweep.user_counts entries must be positive")
    if so.tau_bps is not None and not so.tau_bps > 0:
        raise ConfigError("solver.tau_bps must be positive")
    if so.max_sca_iterations < 1 or so.max_barrier_steps < 1 or not 1 <= so.multi_start <= 3:
        raise ConfigError("solver caps must be positive and multi_start in 1..3")
    if cfg.output.plot_format not in ("svg", "png", "pdf"):
        raise ConfigError("output.plot_format must be svg, png or pdf")
    try:
        cfg.build_scenario()
        for s_th in sw.thresholds:
            SemanticConfig(k=cfg.model.k, i_per_l=cfg.model.i_per_l, s_th=s_th).check(cfg.logistic_params())
    except SemRsmaError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError(f"{line}malformed YAML: {getattr(exc, 'problem', exc)}") from exc
    cfg = _build(RunConfig, data, (), _line_index(text))
    _validate(cfg)
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    """Read ``path``; ``None`` loads the shipped default."""
    if path is None:
        return parse_config(default_config_text())
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


def default_config_text() -> str:
    return resources.files("semrsma").joinpath("data/default.yaml").read_text(encoding="utf-8")


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
