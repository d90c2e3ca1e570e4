from __future__ import annotations

import numpy as np
import pytest

from semrsma.config import RunConfig
from semrsma.scenario import explicit_scenario
from semrsma.semantic_model import LogisticParams, SemanticConfig

TOY = LogisticParams(a1=0.2, a2=0.9, c1=0.25, c2=0.0)


def default_config() -> RunConfig:
    return RunConfig()


def default_scenario(n_sem: int = 1, s_th: float = 0.8):
    cfg = RunConfig()
    scn = cfg.build_scenario(n_sem)
    return scn if s_th == 0.8 else scn.with_threshold(s_th)


def toy_scenario(gain_bit=3e-8, gains_sem=(1.2e-8,), s_th=0.8, params=TOY):
    return explicit_scenario(gain_bit, list(gains_sem), cfg=SemanticConfig(k=params.k, s_th=s_th), params=params)


@pytest.fixture
def scn1():
    return default_scenario(1)


@pytest.fixture
def scn2():
    return default_scenario(2)


@pytest.fixture
def scn4():
    return default_scenario(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
