"""Multipath channel generation: ULA steering, log-distance path loss,
clustered LoS + NLoS draws, and network layout.

Channels are static within one beacon interval and redrawn per Monte-Carlo
realization.  Everything is a pure function of an explicit RNG handle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Scenario


@dataclass
class SteeringVector:
    """Array response of a ULA at spatial direction psi (psi = sin of the
    physical angle under half-wavelength spacing, so psi is in [-1, 1])."""
    angle: float
    elements: np.ndarray


def steering(angle: float, m: int) -> SteeringVector:
    """Unit-norm ULA response: element i equals exp(j*pi*i*angle)/sqrt(m)."""
    if m < 1:
        raise ValueError("antenna count must be >= 1")
    return SteeringVector(angle, steering_array(angle, m))


def steering_array(angle, m: int) -> np.ndarray:
    """Vectorized steering: accepts scalar or array of directions.

    Returns shape (..., m) with unit Euclidean norm along the last axis.
    """
    psi = np.asarray(angle, dtype=float)
    phase = np.pi * psi[..., None] * np.arange(m)
    return np.exp(1j * phase) / np.sqrt(m)


def path_loss_db(d: np.ndarray | float, pl0_db: float, exponent: float,
                 d0: float = 1.0) -> np.ndarray | float:
    """Log-distance path loss PL(dB) = PL0 + 10*n*log10(d/d0), floored at d0."""
    d_eff = np.maximum(np.asarray(d, dtype=float), d0)
    return pl0_db + 10.0 * exponent * np.log10(d_eff / d0)


def _path_gains(rng: np.random.Generator, d: float, n_nlos: int,
                sc: Scenario) -> np.ndarray:
    """Complex per-path gains: deterministic-magnitude LoS with uniform phase,
    circularly-symmetric Gaussian NLoS with path-loss-set variance."""
    g_los = 10.0 ** (-path_loss_db(d, sc.pl0_db, sc.pl_exp_los) / 20.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    gains = np.empty(1 + n_nlos, dtype=complex)
    gains[0] = g_los * np.exp(1j * phase)
    if n_nlos > 0:
        var = 10.0 ** (-(path_loss_db(d, sc.pl0_db, sc.pl_exp_nlos)
                         + sc.nlos_extra_db) / 10.0)
        gains[1:] = np.sqrt(var / 2.0) * (rng.standard_normal(n_nlos)
                                          + 1j * rng.standard_normal(n_nlos))
    return gains


def sv_second_moment(d: float, n_nlos: int, sc: Scenario) -> float:
    """Analytic E[sum_l |beta_l|^2] for a draw at distance d (oracle for the
    Monte-Carlo norm test; steering vectors are unit norm)."""
    g_los2 = 10.0 ** (-path_loss_db(d, sc.pl0_db, sc.pl_exp_los) / 10.0)
    var = 10.0 ** (-(path_loss_db(d, sc.pl0_db, sc.pl_exp_nlos)
                     + sc.nlos_extra_db) / 10.0)
    return g_los2 + n_nlos * var


def draw_sv_channel(rng: np.random.Generator, tx_pos: np.ndarray,
                    rx_pos: np.ndarray, m_rx: int, sc: Scenario,
                    m_tx: int | None = None, n_nlos: int | None = None) -> np.ndarray:
    """One clustered-multipath draw: the LoS path plus n_nlos scattered paths.

    Vector channel (m_rx,) when m_tx is None, else matrix (m_rx, m_tx) built
    from rank-one steering outer products.  Angles of arrival/departure are
    uniform on [0, 2pi); spatial directions are their sines.
    """
    d = float(np.linalg.norm(np.asarray(tx_pos, float) - np.asarray(rx_pos, float)))
    if d <= 0.0:
        raise ValueError("TX and RX positions coincide")
    L = sc.n_nlos if n_nlos is None else n_nlos
    gains = _path_gains(rng, d, L, sc)
    psi_rx = np.sin(rng.uniform(0.0, 2.0 * np.pi, size=1 + L))
    a_rx = steering_array(psi_rx, m_rx)                      # (L+1, m_rx)
    if m_tx is None:
        return (gains[:, None] * a_rx).sum(axis=0)
    psi_tx = np.sin(rng.uniform(0.0, 2.0 * np.pi, size=1 + L))
    a_tx = steering_array(psi_tx, m_tx)                      # (L+1, m_tx)
    return np.einsum("l,li,lj->ij", gains, a_rx, a_tx.conj())


@dataclass
class Layout:
    """Node positions in the square service area (meters)."""
    nru_aps: np.ndarray       # (I, 2)
    nru_users: np.ndarray     # (K, 2)
    wigig_aps: np.ndarray     # (Ja, 2)
    wigig_users: np.ndarray   # (Ju_total, 2)
    wigig_assoc: np.ndarray   # (Ju_total,) owning WiGig AP index


def _grid_positions(n: int, area: float, offset: float) -> np.ndarray:
    """Deterministic AP grid: n points on a centered lattice."""
    side = int(np.ceil(np.sqrt(n)))
    xs = (np.arange(side) + 0.5) / side * area
    pts = np.stack(np.meshgrid(xs, xs), axis=-1).reshape(-1, 2)[:n]
    return pts + offset


def make_layout(rng: np.random.Generator, sc: Scenario) -> Layout:
    area = sc.area_m
    ju = sc.n_wigig_ap * sc.n_wigig_users_per_ap
    return Layout(
        nru_aps=_grid_positions(sc.n_nru_ap, area, offset=0.0),
        nru_users=rng.uniform(0.0, area, size=(sc.n_users, 2)),
        wigig_aps=_grid_positions(sc.n_wigig_ap, area, offset=area * 0.043),
        wigig_users=rng.uniform(0.0, area, size=(ju, 2)),
        wigig_assoc=np.repeat(np.arange(sc.n_wigig_ap), sc.n_wigig_users_per_ap),
    )


@dataclass
class ChannelSet:
    """All inter-node channels touching the NR-U network.

    h[i, k]   : NR-U user k  -> NR-U AP i          (M0,)
    gc[i, j]  : WiGig AP j   -> NR-U AP i          (M0, M_A)
    gw[j, k]  : NR-U user k  -> WiGig user j       (M_U,)
    """
    h: np.ndarray
    gc: np.ndarray
    gw: np.ndarray

    def h_eff(self, sc: Scenario) -> np.ndarray:
        """Per-beam view (U, K, M0): beam u sees the channels of its AP."""
        beam_ap = np.arange(sc.n_beams) // sc.n0
        return self.h[beam_ap]


def draw_channel_set(rng: np.random.Generator, sc: Scenario,
                     layout: Layout) -> ChannelSet:
    I, K = sc.n_nru_ap, sc.n_users
    ja = sc.n_wigig_ap
    ju = layout.wigig_users.shape[0]
    h = np.empty((I, K, sc.m0), dtype=complex)
    gc = np.empty((I, ja, sc.m0, sc.m_wigig_ap), dtype=complex)
    gw = np.empty((ju, K, sc.m_wigig_user), dtype=complex)
    for i in range(I):
        for k in range(K):
            h[i, k] = draw_sv_channel(rng, layout.nru_users[k],
                                      layout.nru_aps[i], sc.m0, sc)
        for j in range(ja):
            gc[i, j] = draw_sv_channel(rng, layout.wigig_aps[j],
                                       layout.nru_aps[i], sc.m0, sc,
                                       m_tx=sc.m_wigig_ap)
    for j in range(ju):
        for k in range(K):
            gw[j, k] = draw_sv_channel(rng, layout.nru_users[k],
                                       layout.wigig_users[j],
                                       sc.m_wigig_user, sc)
    return ChannelSet(h=h, gc=gc, gw=gw)
