"""SINR/rate evaluation against a term-by-term oracle, interference at the
incumbent receivers, and the auxiliary-gain identities."""

import numpy as np
import pytest

from mmwcoex.channel import draw_channel_set, make_layout
from mmwcoex.config import make_scenario
from mmwcoex.queues import QueueState, sic_order
from mmwcoex.rates import (Decision, effective_gains, sinr_and_rate,
                           wigig_interference)
from mmwcoex.wigig import build_wigig_state


def _setup(seed=0, **overrides):
    sc = make_scenario("desk", **overrides)
    rng = np.random.default_rng(seed)
    lay = make_layout(rng, sc)
    ch = draw_channel_set(rng, sc, lay)
    wg = build_wigig_state(rng, sc, sc.n_sp, lay)
    return sc, ch, wg


def _random_decision(rng, sc):
    U, K = sc.n_beams, sc.n_users
    I = sc.n_nru_ap
    x = np.zeros((U, K))
    x[rng.integers(0, U, K), np.arange(K)] = 1.0
    f = np.exp(1j * rng.uniform(0, 2 * np.pi, (I, sc.m0, sc.n0)))
    d = (rng.standard_normal((I, sc.n0, sc.n0))
         + 1j * rng.standard_normal((I, sc.n0, sc.n0)))
    p = rng.uniform(0, sc.p_max_mw, K)
    return Decision(x=x, f=f, d=d, p=p)


def _oracle_rates(decision, channels, wigig, order, t, sc):
    """Direct evaluation of the post-cancellation SINR, looping over every
    interfering stream and incumbent transmitter."""
    U, K = sc.n_beams, sc.n_users
    w = decision.w_eff()
    pos = np.empty(K, dtype=int)
    pos[np.asarray(order)] = np.arange(K)
    tx, _, va = wigig.active(t)
    gamma = np.zeros((U, K))
    for u in range(U):
        ap = u // sc.n0
        for k in range(K):
            num = decision.x[u, k] * abs(np.vdot(w[:, u], channels.h[ap, k])) ** 2 \
                * decision.p[k]
            den = sc.noise_mw
            for v in range(U):
                for kk in range(K):
                    same = (v == u and pos[kk] > pos[k])
                    other = (v != u and kk != k)
                    if same or other:
                        den += decision.x[v, kk] * decision.p[kk] * \
                            abs(np.vdot(w[:, u], channels.h[ap, kk])) ** 2
            for jj, j in enumerate(tx):
                geff = channels.gc[ap, j] @ va[jj]
                row = w[:, u].conj() @ geff
                den += float(np.real(row @ row.conj())) * wigig.p_w[j]
            gamma[u, k] = num / den
    return gamma


def test_single_user_single_beam_no_incumbent():
    sc, ch, wg = _setup(seed=1, n_users=1, n0=1, m0=8)
    rng = np.random.default_rng(2)
    dec = _random_decision(rng, sc)
    dec.x[:] = 1.0
    # silence the incumbent transmitters
    wg.p_w[:] = 0.0
    order = np.array([0])
    rr = sinr_and_rate(dec, ch, wg, order, 0, sc)
    w = dec.w_eff()[:, 0]
    want = abs(np.vdot(w, ch.h[0, 0])) ** 2 * dec.p[0] / sc.noise_mw
    assert rr.gamma[0, 0] == pytest.approx(want, rel=1e-12)


def test_sic_excludes_earlier_decoded_user():
    sc, ch, wg = _setup(seed=3, n_users=2, n0=1, m0=8)
    rng = np.random.default_rng(4)
    dec = _random_decision(rng, sc)
    dec.x[:] = 1.0           # both users share the single beam
    order = np.array([0, 1])  # user 0 decoded first
    rr = sinr_and_rate(dec, ch, wg, order, 0, sc)
    w = dec.w_eff()[:, 0]
    g = [abs(np.vdot(w, ch.h[0, k])) ** 2 for k in range(2)]
    tx, _, va = wg.active(0)
    wig = sum(float(np.real((w.conj() @ (ch.gc[0, j] @ va[jj]))
                            @ (w.conj() @ (ch.gc[0, j] @ va[jj])).conj()))
              * wg.p_w[j] for jj, j in enumerate(tx))
    # earlier-decoded user suffers the later one's power; not vice versa
    assert rr.gamma[0, 0] == pytest.approx(
        g[0] * dec.p[0] / (g[1] * dec.p[1] + wig + sc.noise_mw), rel=1e-12)
    assert rr.gamma[0, 1] == pytest.approx(
        g[1] * dec.p[1] / (wig + sc.noise_mw), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_rates_match_term_by_term_oracle(seed):
    sc, ch, wg = _setup(seed=seed, n_users=3, m0=8)
    rng = np.random.default_rng(seed + 10)
    dec = _random_decision(rng, sc)
    qs = QueueState(q=rng.uniform(0, 1, 3), zc=rng.uniform(0, 1, 3), zw=0.0)
    order = sic_order(qs)
    rr = sinr_and_rate(dec, ch, wg, order, 0, sc)
    want = _oracle_rates(dec, ch, wg, order, 0, sc)
    np.testing.assert_allclose(rr.gamma, want, rtol=1e-10)
    np.testing.assert_allclose(rr.r_k, np.log2(1 + want).sum(axis=0),
                               rtol=1e-10)


def test_interference_zero_power_and_single_term():
    sc, ch, wg = _setup(seed=6)
    rng = np.random.default_rng(7)
    dec = _random_decision(rng, sc)
    dec.p[:] = 0.0
    i_j, total = wigig_interference(dec, ch, wg, 0)
    np.testing.assert_allclose(i_j, 0.0)
    assert total == 0.0

    dec.p[:] = 0.0
    dec.p[0] = 1.0
    i_j, _ = wigig_interference(dec, ch, wg, 0)
    rx = wg.rx_sched[0]
    want = [abs(np.vdot(wg.v_user[j], ch.gw[j, 0])) ** 2 for j in rx]
    np.testing.assert_allclose(i_j, want, rtol=1e-12)


def test_interference_scales_linearly_onto_cap():
    sc, ch, wg = _setup(seed=8)
    rng = np.random.default_rng(9)
    dec = _random_decision(rng, sc)
    dec.p[:] = sc.p_max_mw
    i_j, _ = wigig_interference(dec, ch, wg, 0)
    alpha = sc.i_max_mw / i_j.max()
    dec.p *= alpha
    i_j2, _ = wigig_interference(dec, ch, wg, 0)
    assert i_j2.max() == pytest.approx(sc.i_max_mw, rel=1e-9)


def test_effective_gains_identity_with_fd_beamformer():
    sc, ch, wg = _setup(seed=12, n_users=3)
    rng = np.random.default_rng(13)
    dec = _random_decision(rng, sc)
    qs = QueueState(q=rng.uniform(0, 1, 3), zc=np.zeros(3), zw=0.0)
    order = sic_order(qs)
    w = dec.w_eff()
    eg = effective_gains(dec, w, ch, wg, order, 0, sc)
    rr = sinr_and_rate(dec, ch, wg, order, 0, sc)
    np.testing.assert_allclose(eg.gamma, rr.gamma, rtol=1e-12)
    # mu rows vanish for unassigned users, and the rearranged identity holds
    for k in range(3):
        for u in range(sc.n_beams):
            for v in range(sc.n_beams):
                if dec.x[v, k] == 0.0:
                    assert eg.mu[u, v, k] == 0.0
    assert np.all(eg.mu >= 0) and np.all(eg.xi >= 0)


def test_rate_monotone_in_own_power():
    sc, ch, wg = _setup(seed=14, n_users=3)
    rng = np.random.default_rng(15)
    dec = _random_decision(rng, sc)
    order = np.arange(3)
    k = 1
    u = int(np.argmax(dec.x[:, k]))
    base = sinr_and_rate(dec, ch, wg, order, 0, sc).gamma[u, k]
    dec.p[k] *= 2.0
    assert sinr_and_rate(dec, ch, wg, order, 0, sc).gamma[u, k] >= base


def test_sic_relabeling_preserves_rate_multiset():
    """Swapping two users' indices together with their queue states leaves
    the collection of achieved rates unchanged."""
    sc, ch, wg = _setup(seed=16, n_users=3)
    rng = np.random.default_rng(17)
    dec = _random_decision(rng, sc)
    q = rng.uniform(0, 1, 3)
    qs = QueueState(q=q, zc=np.zeros(3), zw=0.0)
    rr = sinr_and_rate(dec, ch, wg, sic_order(qs), 0, sc)

    perm = np.array([1, 0, 2])
    ch2 = type(ch)(h=ch.h[:, perm], gc=ch.gc, gw=ch.gw[:, perm])
    dec2 = Decision(x=dec.x[:, perm], f=dec.f, d=dec.d, p=dec.p[perm])
    qs2 = QueueState(q=q[perm], zc=np.zeros(3), zw=0.0)
    rr2 = sinr_and_rate(dec2, ch2, wg, sic_order(qs2), 0, sc)
    np.testing.assert_allclose(np.sort(rr2.r_k), np.sort(rr.r_k), rtol=1e-10)
