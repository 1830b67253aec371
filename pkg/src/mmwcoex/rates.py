"""Per-user SINR and rates after queue-ordered interference cancellation,
aggregate interference at the incumbent receivers, and the auxiliary
effective-gain representation used by the solver.

All quantities here are in physical units (mW, bit/s/Hz).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .config import Scenario
from .queues import interference_mask
from .wigig import WiGigState


@dataclass
class Decision:
    """One SP's scheduling decision.

    x : (U, K) grouping indicators (binary at solver output)
    f : (I, M0, N0) analog beamformers, unit-modulus entries
    d : (I, N0, N0) digital beamformers
    p : (K,) transmit powers, mW
    """
    x: np.ndarray
    f: np.ndarray
    d: np.ndarray
    p: np.ndarray

    def w_eff(self) -> np.ndarray:
        """Effective per-beam combiners w_u = F_{I(u)} d_u, shape (M0, U)."""
        cols = [self.f[i] @ self.d[i] for i in range(self.f.shape[0])]
        return np.concatenate(cols, axis=1)

    def check(self, sc: Scenario, atol: float = 1e-9) -> None:
        if not np.allclose(np.abs(self.f), 1.0, atol=atol):
            raise ValueError("analog beamformer entries must be unit modulus")
        occupancy = self.x.sum(axis=0)
        if np.any(self.p < -atol) or np.any(self.p > occupancy * sc.p_max_mw + atol):
            raise ValueError("power outside its box")


@dataclass
class EffectiveGains:
    mu: np.ndarray      # (U, U, K) data/interference gains
    xi: np.ndarray      # (U, Jt) incumbent interference gains
    gamma: np.ndarray   # (U, K) SINR reconstructed from mu/xi


@dataclass
class RateResult:
    gamma: np.ndarray   # (U, K)
    r_uk: np.ndarray    # (U, K) bit/s/Hz
    r_k: np.ndarray     # (K,)


def beam_gains(w: np.ndarray, h_eff: np.ndarray) -> np.ndarray:
    """|w_u^H h_{u,k}|^2 for every beam/user pair; w is (M0, U)."""
    t = np.einsum("mu,ukm->uk", w.conj(), h_eff)
    return np.abs(t) ** 2


def wigig_beam_gains(w: np.ndarray, g_eff: np.ndarray) -> np.ndarray:
    """||w_u^H Gtilde_{u,j}||^2 for every beam/incumbent-TX pair.

    g_eff has shape (U, Jt, M0, Na).
    """
    if g_eff.shape[1] == 0:
        return np.zeros((w.shape[1], 0))
    t = np.einsum("mu,ujmn->ujn", w.conj(), g_eff)
    return (np.abs(t) ** 2).sum(axis=-1)


def effective_wigig_channels(channels: ChannelSet, wigig: WiGigState,
                             sc: Scenario, t: int) -> tuple[np.ndarray, np.ndarray]:
    """(G_eff, p_w) for SP t: G_eff[u, j] = Gc[I(u), j] @ V_j^A of the active
    group, shape (U, Jt, M0, Na); p_w per-stream powers (Jt,)."""
    tx, _, va = wigig.active(t)
    beam_ap = np.arange(sc.n_beams) // sc.n0
    U = sc.n_beams
    g_eff = np.empty((U, len(tx), sc.m0, sc.n_wigig_ap_rf), dtype=complex)
    for jj, j in enumerate(tx):
        for u in range(U):
            g_eff[u, jj] = channels.gc[beam_ap[u], j] @ va[jj]
    return g_eff, wigig.p_w[tx]


def rx_interference_coeffs(channels: ChannelSet, wigig: WiGigState,
                           t: int) -> tuple[np.ndarray, np.ndarray]:
    """(rx user ids, A) with A[j, k] = ||v_j^H g_{j,k}||^2, shape (Jr, K)."""
    rx = wigig.rx_sched[t]
    if rx.size == 0:
        return rx, np.zeros((0, channels.gw.shape[1]))
    v = wigig.v_user[rx]                               # (Jr, Mu)
    a = np.abs(np.einsum("jm,jkm->jk", v.conj(), channels.gw[rx])) ** 2
    return rx, a


def sinr_with_mask(x: np.ndarray, p: np.ndarray, g2: np.ndarray,
                   gw2: np.ndarray, p_w: np.ndarray, sigma2: float,
                   smask: np.ndarray) -> np.ndarray:
    """SINR of every (beam, user) stream given the interference set mask."""
    cross = np.einsum("ukvj,vj->ukj", smask, x)        # sum over u' of x[u',k']
    interference = np.einsum("ukj,uj,j->uk", cross, g2, p)
    wig = gw2 @ p_w if p_w.size else 0.0
    den = interference + (wig[:, None] if p_w.size else 0.0) + sigma2
    return x * g2 * p[None, :] / den


def sinr_and_rate(decision: Decision, channels: ChannelSet, wigig: WiGigState,
                  sic_perm: np.ndarray, t: int, sc: Scenario) -> RateResult:
    """Rates of every stream under the decision at SP t.

    sic_perm is the decode order (ascending backlog) from the queue module.
    """
    U, K = sc.n_beams, sc.n_users
    if decision.x.shape != (U, K):
        raise ValueError(f"grouping shape {decision.x.shape} != {(U, K)}")
    w = decision.w_eff()
    g2 = beam_gains(w, channels.h_eff(sc))
    g_eff, p_w = effective_wigig_channels(channels, wigig, sc, t)
    gw2 = wigig_beam_gains(w, g_eff)
    smask = interference_mask(np.asarray(sic_perm), U)
    gamma = sinr_with_mask(decision.x, decision.p, g2, gw2, p_w,
                           sc.noise_mw, smask)
    r_uk = np.log2(1.0 + gamma)
    return RateResult(gamma=gamma, r_uk=r_uk, r_k=r_uk.sum(axis=0))


def wigig_interference(decision: Decision, channels: ChannelSet,
                       wigig: WiGigState, t: int) -> tuple[np.ndarray, float]:
    """(per-receiver interference I_j in mW for j scheduled at t, total)."""
    _, a = rx_interference_coeffs(channels, wigig, t)
    per_user = decision.x.sum(axis=0) * decision.p      # sum_u x_{u,k} p_k
    i_j = a @ per_user
    return i_j, float(i_j.sum())


def effective_gains(decision: Decision, w: np.ndarray, channels: ChannelSet,
                    wigig: WiGigState, sic_perm: np.ndarray, t: int,
                    sc: Scenario) -> EffectiveGains:
    """Auxiliary gains mu, xi for an arbitrary beamformer w (M0, U), plus the
    SINR they induce; identical to sinr_and_rate when w equals F D."""
    g2 = beam_gains(w, channels.h_eff(sc))
    g_eff, p_w = effective_wigig_channels(channels, wigig, sc, t)
    gw2 = wigig_beam_gains(w, g_eff)
    mu = decision.x[None, :, :] * g2[:, None, :] * decision.p[None, None, :]
    xi = gw2 * p_w[None, :]
    smask = interference_mask(np.asarray(sic_perm), sc.n_beams)
    lam = np.einsum("ukvj,uvj->uk", smask, mu) + xi.sum(axis=1)[:, None] \
        + sc.noise_mw
    diag = np.einsum("uuk->uk", mu)
    return EffectiveGains(mu=mu, xi=xi, gamma=diag / lam)
