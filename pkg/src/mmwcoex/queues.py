"""Traffic and virtual queues across service periods, the queue-aware
decoding order, and drift-plus-penalty bookkeeping.

Units: rates in bit/s/Hz, SP duration tau in seconds, queues in bit/Hz,
interference and its virtual queue in mW.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import Scenario


@dataclass
class QueueState:
    q: np.ndarray    # (K,) traffic backlog, bit/Hz
    zc: np.ndarray   # (K,) delay virtual queue, bit/Hz
    zw: float        # interference virtual queue, mW
    t: int = 0

    @classmethod
    def initial(cls, n_users: int) -> "QueueState":
        return cls(q=np.zeros(n_users), zc=np.zeros(n_users), zw=0.0, t=0)


@dataclass
class ArrivalProcess:
    """Quantized Poisson arrivals, truncated at the configured quantile so
    the largest per-SP burst a_max is finite."""
    density: float          # bit/s/Hz
    packet: float           # bit/Hz per packet
    tau_s: float
    cap_counts: int

    @classmethod
    def from_scenario(cls, sc: Scenario) -> "ArrivalProcess":
        if sc.arrival_density < 0:
            raise ValueError("arrival density must be >= 0")
        return cls(density=sc.arrival_density, packet=sc.arrival_packet,
                   tau_s=sc.tau_s, cap_counts=sc.arrival_cap_counts())

    @property
    def mean(self) -> float:
        return self.density * self.tau_s

    @property
    def a_max(self) -> float:
        return self.cap_counts * self.packet

    def draw(self, rng: np.random.Generator, n_users: int) -> np.ndarray:
        if self.density == 0.0:
            return np.zeros(n_users)
        counts = rng.poisson(self.mean / self.packet, size=n_users)
        return np.minimum(counts, self.cap_counts) * self.packet


def step_queues(state: QueueState, rates: np.ndarray, tau: float,
                arrivals: np.ndarray, i_w: float, i_avg: float,
                q_bar: np.ndarray) -> QueueState:
    """One SP transition: drain by rates*tau, add arrivals, advance both
    virtual queues with max[.,0] updates."""
    rates = np.asarray(rates, float)
    arrivals = np.asarray(arrivals, float)
    if np.any(rates < 0) or np.any(arrivals < 0) or tau < 0 or i_w < 0:
        raise ValueError("negative rate/arrival/duration/interference")
    q_next = np.maximum(state.q - rates * tau, 0.0) + arrivals
    zw_next = max(state.zw - i_avg + i_w, 0.0)
    zc_next = np.maximum(state.zc - q_bar + q_next, 0.0)
    return QueueState(q=q_next, zc=zc_next, zw=zw_next, t=state.t + 1)


def sic_order(state: QueueState) -> np.ndarray:
    """Decoding order: ascending total backlog q + zc, ties by user index.

    Users later in the order see the earlier ones' intra-beam interference
    cancelled.
    """
    return np.argsort(state.q + state.zc, kind="stable")


def decode_positions(order: np.ndarray) -> np.ndarray:
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    return pos


def interference_mask(order: np.ndarray, n_beams: int) -> np.ndarray:
    """Boolean (U, K, U, K): entry [u,k,u',k'] marks streams interfering with
    user k on beam u after cancellation: same-beam later-decoded users plus
    every other user on every other beam."""
    K = order.size
    pos = decode_positions(order)
    later = pos[None, :] > pos[:, None]              # (K, K) k' decoded after k
    other_user = ~np.eye(K, dtype=bool)
    same_beam = np.eye(n_beams, dtype=bool)
    mask = (same_beam[:, None, :, None] & later[None, :, None, :]) | \
           (~same_beam[:, None, :, None] & other_user[None, :, None, :])
    return mask


@dataclass
class DriftPenaltyResult:
    reward: float     # one-SP scheduling objective value
    b1: float         # state-independent bound constant
    b2: float         # frame-fixed bound constant
    bound: float      # full upper bound on the realized drift-plus-penalty


def drift_penalty_terms(state: QueueState, rates: np.ndarray, i_w: float,
                        tau: float, v0: float, v1: float,
                        q_bar: np.ndarray, a_max: float | np.ndarray,
                        i_avg: float, i_cap: float,
                        n_rx: int) -> DriftPenaltyResult:
    """Scheduling reward and the drift-plus-penalty upper-bound constants.

    reward = sum_k R_k + v0 * sum_k (q_k + zc_k) R_k tau - v1 * zw * i_w.
    The bound constants assume R_k*tau <= q_k, arrivals <= a_max and
    i_w <= n_rx * i_cap, all of which the harness enforces pathwise.
    """
    rates = np.asarray(rates, float)
    a_max = np.broadcast_to(np.asarray(a_max, float), state.q.shape)
    r_total = float(rates.sum())
    reward = (r_total
              + v0 * float(((state.q + state.zc) * rates).sum()) * tau
              - v1 * state.zw * i_w)
    b1 = (v0 * float((0.5 * q_bar ** 2 + a_max ** 2).sum())
          + v1 * 0.5 * (i_avg ** 2 + (n_rx * i_cap) ** 2))
    b2 = v0 * float((state.q ** 2
                     + state.zc * (state.q - q_bar + a_max)).sum())
    bound = (b1 + b2 + v1 * i_w * (state.zw - i_avg)
             - v0 * float(((state.q + state.zc) * rates).sum()) * tau
             - r_total)
    return DriftPenaltyResult(reward=reward, b1=b1, b2=b2, bound=bound)


def realized_drift_penalty(state: QueueState, nxt: QueueState,
                           rates: np.ndarray, v0: float, v1: float) -> float:
    """Pathwise drift-plus-penalty of one realized transition: weighted sum
    of half squared-queue increments minus the achieved sum rate."""
    dzc = 0.5 * float((nxt.zc ** 2 - state.zc ** 2).sum())
    dzw = 0.5 * (nxt.zw ** 2 - state.zw ** 2)
    return v0 * dzc + v1 * dzw - float(np.asarray(rates, float).sum())
