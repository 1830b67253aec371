"""Per-SP solver context in noise-normalized units.

Channels are divided by the noise standard deviation so the effective noise
power is 1 and every equality residual lives on the SINR scale; the printed
violation thresholds are meaningful there.  SINR, rates and powers (mW) are
invariant under this scaling, so decisions map back to physical units
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelSet
from ..config import Scenario
from ..queues import QueueState, interference_mask, sic_order
from ..rates import effective_wigig_channels, rx_interference_coeffs
from ..wigig import WiGigState


@dataclass
class SolveContext:
    h_eff: np.ndarray        # (U, K, M0), scaled by 1/sigma
    g_eff: np.ndarray        # (U, Jt, M0, Na), scaled by 1/sigma
    p_w: np.ndarray          # (Jt,) incumbent per-stream powers, mW
    a_rx: np.ndarray         # (Jr, K) scaled receiver interference coefficients
    i_cap: float             # per-receiver cap in scaled units
    w0: np.ndarray           # (K,) rate weights V0(Q+Zc)tau + 1
    w1: float                # scaled interference penalty weight V1*Zw*sigma2
    pmax: float              # mW
    rmin: np.ndarray         # (K,) effective minimum rates (0 where waived)
    gamma_max: np.ndarray    # (K,)
    smask: np.ndarray        # (U, K, U, K) interference set
    beam_ap: np.ndarray      # (U,)
    n0: int
    sigma2: float = 1.0
    # reporting/evaluation extras
    sigma2_phys: float = 1.0
    tau: float = 1.0
    v0: float = 0.0
    v1: float = 0.0
    zw: float = 0.0
    qzc: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rate_cap: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dropped_rmin: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    @property
    def n_beams(self) -> int:
        return self.h_eff.shape[0]

    @property
    def n_users(self) -> int:
        return self.h_eff.shape[1]

    @property
    def m0(self) -> int:
        return self.h_eff.shape[2]

    @property
    def n_tx(self) -> int:
        return self.g_eff.shape[1]

    @property
    def n_rx(self) -> int:
        return self.a_rx.shape[0]


def build_context(sc: Scenario, channels: ChannelSet, wigig: WiGigState,
                  queues: QueueState, t: int) -> SolveContext:
    sigma2 = sc.noise_mw
    sigma = np.sqrt(sigma2)
    g_eff, p_w = effective_wigig_channels(channels, wigig, sc, t)
    _, a_rx = rx_interference_coeffs(channels, wigig, t)

    rate_cap = queues.q / sc.tau_s                      # bit/s/Hz per user
    # cap the SINR ceiling before exponentiating to avoid overflow
    exp_cap = np.minimum(rate_cap, np.log2(1.0 + sc.gamma_ceiling))
    gamma_max = np.exp2(exp_cap) - 1.0
    rmin = np.full(sc.n_users, sc.r_min)
    dropped = rate_cap < sc.r_min                       # demand exceeds backlog
    rmin[dropped] = 0.0

    order = sic_order(queues)
    return SolveContext(
        h_eff=channels.h_eff(sc) / sigma,
        g_eff=g_eff / sigma,
        p_w=p_w,
        a_rx=a_rx / sigma2,
        i_cap=sc.i_max_mw / sigma2,
        w0=sc.v0 * (queues.q + queues.zc) * sc.tau_s + 1.0,
        w1=sc.v1 * queues.zw * sigma2,
        pmax=sc.p_max_mw,
        rmin=rmin,
        gamma_max=gamma_max,
        smask=interference_mask(order, sc.n_beams),
        beam_ap=np.arange(sc.n_beams) // sc.n0,
        n0=sc.n0,
        sigma2=1.0,
        sigma2_phys=sigma2,
        tau=sc.tau_s,
        v0=sc.v0,
        v1=sc.v1,
        zw=queues.zw,
        qzc=queues.q + queues.zc,
        rate_cap=rate_cap,
        dropped_rmin=dropped,
    )


def stream_gains(w: np.ndarray, ctx: SolveContext) -> tuple[np.ndarray, np.ndarray]:
    """(|w_u^H h_{u,k}|^2, ||w_u^H G_{u,j}||^2) for a (M0, U) beamformer."""
    tw = np.einsum("mu,ukm->uk", w.conj(), ctx.h_eff)
    g2 = np.abs(tw) ** 2
    if ctx.n_tx:
        tg = np.einsum("mu,ujmn->ujn", w.conj(), ctx.g_eff)
        r2 = (np.abs(tg) ** 2).sum(axis=-1)
    else:
        r2 = np.zeros((ctx.n_beams, 0))
    return g2, r2


def rates_for(x: np.ndarray, p: np.ndarray, w: np.ndarray,
              ctx: SolveContext, cap: bool = True) -> np.ndarray:
    """Per-stream rates under the decision on this context's channels."""
    g2, r2 = stream_gains(w, ctx)
    cross = np.einsum("ukvj,vj->ukj", ctx.smask, x)
    den = np.einsum("ukj,uj,j->uk", cross, g2, p) + \
        (r2 @ ctx.p_w)[:, None] + ctx.sigma2
    gamma = x * g2 * p[None, :] / den
    r_uk = np.log2(1.0 + np.maximum(gamma, 0.0))
    if cap:
        r_uk = np.minimum(r_uk, ctx.rate_cap[None, :])
    return r_uk


def p2_objective(x: np.ndarray, p: np.ndarray, w: np.ndarray,
                 ctx: SolveContext, cap: bool = True):
    """One-SP scheduling objective of a decision, with the per-stream rates
    capped at the queue drain limit when cap is set.

    Returns (objective, r_uk, physical interference mW).
    """
    r_uk = rates_for(x, p, w, ctx, cap=cap)
    r_k = r_uk.sum(axis=0)
    per_user = x.sum(axis=0) * p
    i_phys = float((ctx.a_rx @ per_user).sum()) * ctx.sigma2_phys
    value = (float(r_k.sum())
             + ctx.v0 * float((ctx.qzc * r_k).sum()) * ctx.tau
             - ctx.v1 * ctx.zw * i_phys)
    return value, r_uk, i_phys
