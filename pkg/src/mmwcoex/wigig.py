"""Incumbent-network state: sector-sweep beam selection, semi-orthogonal
MU-MIMO user groups, per-group zero-forcing digital beamformers, and the
round-robin TX/RX schedule over the service periods of one beacon interval.

This is a generative abstraction of the beam-training exchange: it produces
the beamformers and schedules directly instead of simulating frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Layout, draw_sv_channel, steering_array
from .config import Scenario


def dft_codebook(m: int, oversample: int) -> np.ndarray:
    """Oversampled DFT sector codebook: (n_sectors, m) unit-norm beams
    covering spatial directions in [-1, 1)."""
    n = oversample * m
    psi = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    return steering_array(psi, m)


@dataclass
class WiGigState:
    """Beamformers and schedule for every WiGig AP over one beacon interval.

    v_rf[j][g] : analog beamformer of AP j, group g        (M_A, N_A), zero
                 padded when the group has fewer members than streams
    v_bb[j][g] : per-group ZF digital beamformer           (N_A, N_A)
    v_a[j][g]  : hybrid product, unit-norm active columns  (M_A, N_A)
    v_user[j]  : analog beam of WiGig user j               (M_U,)
    groups[j]  : list of member-index arrays (global WiGig user ids)
    tx_sched[t], rx_sched[t] : transmitting AP ids / receiving user ids
    p_w[j]     : per-stream transmit power of AP j, mW
    """
    v_rf: list
    v_bb: list
    v_a: list
    v_user: np.ndarray
    groups: list
    group_of_sp: np.ndarray   # (Ja, T)
    tx_sched: list
    rx_sched: list
    p_w: np.ndarray
    eff: list = None          # per-group training effective channels

    def active(self, t: int):
        """(tx AP ids, rx user ids, list of active hybrid beamformers)."""
        tx = self.tx_sched[t]
        va = [self.v_a[j][self.group_of_sp[j, t]] for j in tx]
        return tx, self.rx_sched[t], va


def _group_semi_orthogonal(sectors: np.ndarray, codebook: np.ndarray,
                           size: int, threshold: float) -> list[np.ndarray]:
    """Best-fit-decreasing packing: place each user into the fullest group
    whose members' beams all correlate below the threshold with its own."""
    corr = np.abs(codebook.conj() @ codebook.T)     # unit-norm beams
    groups: list[list[int]] = []
    for m, s in enumerate(sectors):
        candidates = [
            g for g in groups
            if len(g) < size and all(corr[s, sectors[o]] < threshold for o in g)
        ]
        if candidates:
            max(candidates, key=len).append(m)
        else:
            groups.append([m])
    return [np.asarray(g, dtype=int) for g in groups]


def build_wigig_state(rng: np.random.Generator, sc: Scenario, T: int,
                      layout: Layout) -> WiGigState:
    """Sector sweep, grouping, ZF and scheduling for every WiGig AP.

    Raises ValueError when an AP has more associated users than codebook
    sectors (grouping infeasible).
    """
    cb_ap = dft_codebook(sc.m_wigig_ap, sc.sector_oversample)
    cb_user = dft_codebook(sc.m_wigig_user, sc.sector_oversample)
    n_sectors = cb_ap.shape[0]
    ju_total = layout.wigig_users.shape[0]

    v_user = np.empty((ju_total, sc.m_wigig_user), dtype=complex)
    best_sector = np.empty(ju_total, dtype=int)
    chan = {}

    for m in range(ju_total):
        j = layout.wigig_assoc[m]
        H = draw_sv_channel(rng, layout.wigig_aps[j], layout.wigig_users[m],
                            sc.m_wigig_user, sc, m_tx=sc.m_wigig_ap)
        chan[m] = H
        # exhaustive sweep over (rx beam, tx sector) pairs
        gains = np.abs(cb_user.conj() @ H @ cb_ap.T)         # (n_rx, n_tx)
        r, s = np.unravel_index(np.argmax(gains), gains.shape)
        v_user[m] = cb_user[r]
        best_sector[m] = s

    v_rf, v_bb, v_a, groups, effs = [], [], [], [], []
    for j in range(sc.n_wigig_ap):
        members = np.flatnonzero(layout.wigig_assoc == j)
        if members.size > n_sectors:
            raise ValueError(
                f"WiGig AP {j}: {members.size} users exceed {n_sectors} sectors")
        local = _group_semi_orthogonal(best_sector[members], cb_ap,
                                       sc.n_wigig_ap_rf, sc.semi_orth_threshold)
        ap_groups = [members[g] for g in local]
        ap_vrf, ap_vbb, ap_va, ap_eff = [], [], [], []
        for g in ap_groups:
            na = sc.n_wigig_ap_rf
            F = np.zeros((sc.m_wigig_ap, na), dtype=complex)
            F[:, :len(g)] = cb_ap[best_sector[g]].T
            # effective channel rows: user combiner applied to its downlink
            E = np.stack([v_user[m].conj() @ chan[m] @ F[:, :len(g)] for m in g])
            B = np.linalg.pinv(E, rcond=1e-10)
            D = np.zeros((na, na), dtype=complex)
            D[:len(g), :len(g)] = B
            V = F @ D
            norms = np.linalg.norm(V, axis=0)
            V[:, norms > 0] /= norms[norms > 0]
            ap_vrf.append(F)
            ap_vbb.append(D)
            ap_va.append(V)
            ap_eff.append(E)
        v_rf.append(ap_vrf)
        v_bb.append(ap_vbb)
        v_a.append(ap_va)
        groups.append(ap_groups)
        effs.append(ap_eff)

    group_of_sp = np.zeros((sc.n_wigig_ap, T), dtype=int)
    tx_sched, rx_sched = [], []
    for t in range(T):
        rx = []
        for j in range(sc.n_wigig_ap):
            g = t % len(groups[j])
            group_of_sp[j, t] = g
            rx.extend(groups[j][g].tolist())
        tx_sched.append(np.arange(sc.n_wigig_ap))
        rx_sched.append(np.asarray(sorted(rx), dtype=int))

    p_w = np.full(sc.n_wigig_ap, sc.p_wigig_mw / sc.n_wigig_ap_rf)
    return WiGigState(v_rf=v_rf, v_bb=v_bb, v_a=v_a, v_user=v_user,
                      groups=groups, group_of_sp=group_of_sp,
                      tx_sched=tx_sched, rx_sched=rx_sched, p_w=p_w,
                      eff=effs)
