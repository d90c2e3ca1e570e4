from __future__ import annotations

import math

import numpy as np
import pytest

from semrsma.errors import DomainError, PointInfeasible
from semrsma.noma import noma_boundary_point, required_sinr
from semrsma.rsma import (
    RsmaAllocation,
    rsma_exact_sinrs,
    sca_rsma,
    split_fraction_profile,
    two_bit_user_baseline,
)
from semrsma.semantic_model import gamma_for_rate, linear_to_db

from conftest import toy_scenario


def resum(g_sem, g_bit, noise, p_sem, p_bit):
    """SINRs by walking the decode order b1, s1, b2, ..., sN, bN+1 and summing what is still undecoded."""
    order = []
    for k in range(len(g_sem)):
        order += [("b", k), ("s", k)]
    order.append(("b", len(g_sem)))
    rx = {("b", k): p_bit[k] * g_bit for k in range(len(p_bit))}
    rx.update({("s", j): p_sem[j] * g_sem[j] for j in range(len(g_sem))})
    out = {}
    for pos, key in enumerate(order):
        interf = noise
        for later in order[pos + 1 :]:
            interf += rx[later]
        out[key] = rx[key] / interf
    return [out[("s", j)] for j in range(len(g_sem))], [out[("b", k)] for k in range(len(p_bit))]


def test_sinrs_match_resummation(rng):
    scn = toy_scenario(gains_sem=(2e-8, 7e-9))
    for _ in range(20):
        ps, pb = rng.uniform(0, 0.05, 2), rng.uniform(0, 0.033, 3)
        sem, bit = rsma_exact_sinrs(scn, ps, pb)
        ref_sem, ref_bit = resum(scn.gains_sem, scn.gain_bit, scn.noise_w, ps, pb)
        assert sem == pytest.approx(ref_sem, rel=1e-15)
        assert bit == pytest.approx(ref_bit, rel=1e-15)


def test_only_last_stream_active():
    scn = toy_scenario(gains_sem=(2e-8, 7e-9))
    ps, pb = [0.01, 0.02], [0.0, 0.0, 0.05]
    sem, _ = rsma_exact_sinrs(scn, ps, pb)
    rb = 0.05 * scn.gain_bit
    assert sem[0] == pytest.approx(0.01 * 2e-8 / (scn.noise_w + 0.02 * 7e-9 + rb), rel=1e-15)
    assert sem[1] == pytest.approx(0.02 * 7e-9 / (scn.noise_w + rb), rel=1e-15)


def test_no_semantic_users():
    scn = toy_scenario(gains_sem=())
    sem, bit = rsma_exact_sinrs(scn, [], [0.1])
    assert sem.size == 0
    assert bit[0] == pytest.approx(0.1 * scn.gain_bit / scn.noise_w, rel=1e-15)


def test_zero_target(scn1):
    alloc = sca_rsma(scn1, 0.0)
    assert alloc.p_bit_split == (0.0, scn1.p_max_watt)
    assert alloc.bit_rate == pytest.approx(scn1.single_user_bit_rate(), rel=1e-15)


def plateau_closed_form(scn, target):
    """Single user on the plateau: the bit user takes the rest of the sum capacity."""
    gamma = required_sinr(scn, target)
    return scn.bandwidth_hz * (math.log2(1 + scn.snr_sem[0] + scn.snr_bit) - math.log2(1 + gamma))


def test_plateau_two_streams_constant_alpha(scn1):
    edge = scn1.plateau_edge
    alphas = []
    for s in np.linspace(edge * 0.01, edge, 10):
        alloc = sca_rsma(scn1, s)
        assert alloc.active_splits == 2
        assert alloc.bit_rate == pytest.approx(plateau_closed_form(scn1, s), rel=1e-6)
        alphas.append(split_fraction_profile(alloc)[0])
    assert 0 < min(alphas)
    assert (max(alphas) - min(alphas)) / max(alphas) < 0.02


def grid_oracle(scn, target, n=101):
    """Best sum rate over (p_s, p_b1, p_b2) meeting the exact semantic SINR target."""
    gamma = required_sinr(scn, target)
    P = scn.p_max_watt
    ps_axis = np.concatenate([[0.0], np.geomspace(P * 1e-5, P, n - 1)])
    ps, b1, b2 = np.meshgrid(ps_axis, np.linspace(0, P, n), np.linspace(0, P, n), indexing="ij")
    gs, gb, nw = scn.gains_sem[0], scn.gain_bit, scn.noise_w
    sem = ps * gs / (nw + b2 * gb)
    r1 = np.log2(1 + b1 * gb / (nw + ps * gs + b2 * gb))
    r2 = np.log2(1 + b2 * gb / nw)
    ok = (sem >= gamma) & (b1 + b2 <= P * (1 + 1e-12))
    return scn.bandwidth_hz * float(np.max((r1 + r2)[ok]))


@pytest.mark.parametrize("target", [0.05e6, 0.11e6])
def test_single_user_against_grid(scn1, target):
    alloc = sca_rsma(scn1, target)
    assert alloc.bit_rate >= grid_oracle(scn1, target) * (1 - 1e-3)
    assert alloc.report.feasibility_violation <= 1e-8


def test_dominates_noma(scn2):
    for s in (1e3, 0.05e6, 0.1e6, 0.11e6):
        assert sca_rsma(scn2, s).bit_rate >= noma_boundary_point(scn2, s).bit_rate - 1e-6 * scn2.bandwidth_hz


def test_returned_allocation_is_feasible(scn2):
    for target in (1e3, 0.08e6, 0.11e6):
        alloc = sca_rsma(scn2, target)
        floor = gamma_for_rate(scn2.cfg, scn2.params, scn2.bandwidth_hz, target)
        sem, bit = rsma_exact_sinrs(scn2, alloc.p_sem, alloc.p_bit_split)
        assert all(linear_to_db(v) >= floor - 1e-6 for v in sem)
        assert sum(alloc.p_bit_split) <= scn2.p_max_watt * (1 + 1e-9)
        assert alloc.bit_rate == pytest.approx(scn2.bandwidth_hz * float(np.sum(np.log2(1 + bit))), rel=1e-12)
        trace = alloc.report.objective_trace
        assert all(b >= a for a, b in zip(trace, trace[1:]))


def test_unreachable_target_raises(scn1):
    with pytest.raises(PointInfeasible):
        sca_rsma(scn1, scn1.max_semantic_rate * 0.99999999)


def fake_alloc(split):
    return RsmaAllocation(1.0, (0.0,), split, 0.0, (), 0, None)


def test_split_profile_examples():
    assert split_fraction_profile(fake_alloc((0.0, 0.1))) == (0.0, 1.0)
    assert split_fraction_profile(fake_alloc((0.03, 0.03))) == (0.5, 0.5)
    with pytest.raises(DomainError):
        split_fraction_profile(fake_alloc((0.0, 0.0)))


# two bit users: reuse the default geometry's first two gains
G1, G2, P, W, NW = 3.3e-7, 1.6e-8, 0.1, 1e6, 1e-11


def r2_max():
    return W * math.log2(1 + P * G2 / NW)


def two_user_grid(r2, n=201):
    a1, a2 = P * G1 / NW, P * G2 / NW
    g2 = 2 ** (r2 / W) - 1
    x = np.linspace(0, 1, n)
    x11, x12, x2 = np.meshgrid(x, x, x, indexing="ij")
    ok = (x11 + x12 <= 1 + 1e-12) & (a2 * x2 >= g2 * (1 + a1 * x12) * (1 - 1e-12))
    r1 = np.log2(1 + a1 * x11 / (1 + a2 * x2 + a1 * x12)) + np.log2(1 + a1 * x12)
    return W * float(np.max(r1[ok]))


def test_two_user_zero_target():
    r1, alpha = two_bit_user_baseline(G1, G2, P, W, NW, 0.0)
    assert alpha == 0.0
    assert r1 == pytest.approx(W * math.log2(1 + P * G1 / NW), rel=1e-9)


def test_two_user_max_target():
    r1, alpha = two_bit_user_baseline(G1, G2, P, W, NW, r2_max())
    # user 2 at full power tolerates no second stream
    assert alpha == pytest.approx(1.0, abs=1e-9)
    assert r1 == pytest.approx(W * math.log2(1 + P * G1 / (NW + P * G2)), rel=1e-6)


def test_two_user_mid_target_against_grid():
    r2 = 0.5 * r2_max()
    r1, alpha = two_bit_user_baseline(G1, G2, P, W, NW, r2)
    assert 0 < alpha < 1
    assert r1 >= two_user_grid(r2) * (1 - 1e-3)
    # rate splitting reaches the capacity-region boundary of the two-user uplink
    a1, a2 = P * G1 / NW, P * G2 / NW
    bound = min(W * math.log2(1 + a1), W * math.log2(1 + a1 + a2) - r2)
    assert r1 == pytest.approx(bound, rel=1e-6)


def test_two_user_alpha_non_decreasing():
    alphas = [two_bit_user_baseline(G1, G2, P, W, NW, r)[1] for r in np.linspace(0, r2_max(), 20)]
    assert alphas[0] == 0.0
    assert all(b >= a - 1e-9 for a, b in zip(alphas, alphas[1:]))


def test_two_user_infeasible_target():
    with pytest.raises(PointInfeasible):
        two_bit_user_baseline(G1, G2, P, W, NW, r2_max() * 1.01)
