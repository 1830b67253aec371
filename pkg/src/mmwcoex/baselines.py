"""Comparison schemes: correlation-based user clustering, phase-matched
analog beams with a zero-forcing digital stage, and fixed/equal power
splits rescaled into the incumbent interference cap.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .channel import ChannelSet
from .config import Scenario
from .rates import Decision, rx_interference_coeffs
from .wigig import WiGigState


class BaselineKind(str, Enum):
    CHS_HBF_FP = "chs_hbf_fp"
    CHS_HBF_EP = "chs_hbf_ep"


def _norm_corr(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.abs(a.conj() @ b) / (na * nb))


def chs_grouping(channels: ChannelSet, sc: Scenario) -> np.ndarray:
    """Cluster-head selection: greedy maximally-decorrelated heads, then
    each remaining user joins the head it correlates with most."""
    U, K = sc.n_beams, sc.n_users
    beam_ap = np.arange(U) // sc.n0
    heads: list[int] = []
    head_beam: dict[int, int] = {}
    for u in range(min(U, K)):
        h_ap = channels.h[beam_ap[u]]
        candidates = [k for k in range(K) if k not in heads]
        if not heads:
            pick = max(candidates, key=lambda k: np.linalg.norm(h_ap[k]))
        else:
            # most decorrelated from every existing head
            def worst_corr(k):
                return max(_norm_corr(h_ap[k], channels.h[beam_ap[hb]][h])
                           for h, hb in zip(heads, (head_beam[h] for h in heads)))
            pick = min(candidates, key=lambda k: (worst_corr(k), k))
        heads.append(pick)
        head_beam[pick] = u

    x = np.zeros((U, K))
    for h in heads:
        x[head_beam[h], h] = 1.0
    for k in range(K):
        if k in heads:
            continue
        best_u, best_c = 0, -1.0
        for h in heads:
            u = head_beam[h]
            c = _norm_corr(channels.h[beam_ap[u]][k], channels.h[beam_ap[u]][h])
            if c > best_c:
                best_u, best_c = u, c
        x[best_u, k] = 1.0
    return x


def _ridge_pinv(b: np.ndarray, ridge: float = 1e-8) -> np.ndarray:
    try:
        p = np.linalg.pinv(b, rcond=1e-10)
        if np.all(np.isfinite(p)):
            return p
    except np.linalg.LinAlgError:
        pass
    n = b.shape[1]
    return np.linalg.solve(b.conj().T @ b + ridge * np.eye(n), b.conj().T)


def hbf_zf(x: np.ndarray, channels: ChannelSet, sc: Scenario):
    """Analog columns phase-matched to each beam's head user, digital stage
    zero-forcing across the heads of the same AP, hybrid columns unit norm."""
    U, K = x.shape
    beam_ap = np.arange(U) // sc.n0
    heads = np.full(U, -1, dtype=int)
    for u in range(U):
        members = np.flatnonzero(x[u] > 0.5)
        if members.size:
            norms = np.linalg.norm(channels.h[beam_ap[u]][members], axis=1)
            heads[u] = members[np.argmax(norms)]

    f = np.ones((sc.n_nru_ap, sc.m0, sc.n0), dtype=complex)
    d = np.zeros((sc.n_nru_ap, sc.n0, sc.n0), dtype=complex)
    for i in range(sc.n_nru_ap):
        beams = np.arange(i * sc.n0, (i + 1) * sc.n0)
        for n, u in enumerate(beams):
            if heads[u] >= 0:
                f[i, :, n] = np.exp(1j * np.angle(channels.h[i, heads[u]]))
        active = [n for n, u in enumerate(beams) if heads[u] >= 0]
        if active:
            b = np.empty((len(active), len(active)), dtype=complex)
            for r, n1 in enumerate(active):
                for c, n2 in enumerate(active):
                    b[r, c] = f[i, :, n1].conj() @ channels.h[i, heads[beams[n2]]]
            zf = _ridge_pinv(b).conj().T          # columns null the cross terms
            for c, n2 in enumerate(active):
                col = np.zeros(sc.n0, dtype=complex)
                col[active] = zf[:, c]
                nrm = np.linalg.norm(f[i] @ col)
                d[i][:, n2] = col / nrm if nrm > 0 else col
        for n, u in enumerate(beams):
            if heads[u] < 0:
                d[i][n, n] = 1.0 / np.sqrt(sc.m0)
    return f, d


def baseline_power(kind: BaselineKind, x: np.ndarray, sc: Scenario,
                   a_rx_mw: np.ndarray, i_cap_mw: float) -> np.ndarray:
    """Fixed split (cap shared within each beam) or equal split (cap shared
    across all users), then one multiplicative backoff onto the cap."""
    K = x.shape[1]
    if kind == BaselineKind.CHS_HBF_EP:
        p = np.full(K, sc.p_max_mw / K)
    else:
        occupancy = x.sum(axis=1)
        beam_of = np.argmax(x, axis=0)
        p = sc.p_max_mw / np.maximum(occupancy[beam_of], 1.0)
    if a_rx_mw.shape[0]:
        loads = a_rx_mw @ (x.sum(axis=0) * p)
        worst = float(loads.max(initial=0.0))
        if worst > i_cap_mw:
            p = p * (i_cap_mw / worst)
    return p


def baseline_decision(kind: BaselineKind, channels: ChannelSet,
                      wigig: WiGigState, sc: Scenario, t: int) -> Decision:
    x = chs_grouping(channels, sc)
    f, d = hbf_zf(x, channels, sc)
    _, a_rx = rx_interference_coeffs(channels, wigig, t)
    p = baseline_power(kind, x, sc, a_rx, sc.i_max_mw)
    return Decision(x=x, f=f, d=d, p=p)
