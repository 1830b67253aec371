"""Augmented-Lagrangian value, its convexified surrogate, and the equality
residual families that drive the outer loop.

The scheduling problem is maximized; every penalty block enters with a
minus sign.  The surrogate replaces the bilinear gain couplings with their
first-order minorant around the previous beamformer iterate, so the
surrogate never exceeds the exact value (for nonnegative gains/powers) and
matches it at the anchor.
"""

from __future__ import annotations

import numpy as np

from .context import SolveContext, stream_gains
from .state import DualState, PrimalState


def objective_f(primal: PrimalState, ctx: SolveContext) -> float:
    """Reward: weighted sum log-rate minus the incumbent-interference charge."""
    rate_sum = float((ctx.w0[None, :] * np.log2(1.0 + primal.gamma)).sum())
    g_k = ctx.a_rx.sum(axis=0) if ctx.n_rx else np.zeros(ctx.n_users)
    return rate_sum - ctx.w1 * float((g_k * primal.p).sum())


def lambda_big(mu: np.ndarray, xi: np.ndarray, ctx: SolveContext) -> np.ndarray:
    """Aggregate interference-plus-noise per stream from the auxiliaries."""
    out = np.einsum("ukvj,uvj->uk", ctx.smask, mu) + ctx.sigma2
    if xi.size:
        out = out + xi.sum(axis=1)[:, None]
    return out


def penalty_terms(primal: PrimalState, dual: DualState,
                  ctx: SolveContext) -> tuple[float, float, float, float]:
    """Exact penalty blocks (L1..L4) of the augmented objective."""
    rho = dual.rho
    x, xt = primal.x, primal.xt

    t1 = (x.sum(axis=0) - 1.0 + rho * dual.lam_u) ** 2
    t2 = (x - xt + rho * dual.lam_x) ** 2
    t3 = (x * (1.0 - xt) + rho * dual.lam_xt) ** 2
    l1 = (t1.sum() + t2.sum() + t3.sum()) / (2.0 * rho)

    resid_w = primal.w - primal.fd_cols() + rho * dual.lam_w
    l2 = float((np.abs(resid_w) ** 2).sum()) / (2.0 * rho)

    g2, r2 = stream_gains(primal.w, ctx)
    mu_target = primal.x[None, :, :] * g2[:, None, :] * primal.p[None, None, :]
    l3 = float(((primal.mu - mu_target + rho * dual.lam_mu) ** 2).sum())
    if ctx.n_tx:
        l3 += float(((primal.xi - r2 * ctx.p_w[None, :]
                      + rho * dual.lam_xi) ** 2).sum())
    l3 /= 2.0 * rho

    lam = lambda_big(primal.mu, primal.xi, ctx)
    diag = np.einsum("uuk->uk", primal.mu)
    l4 = float(((primal.gamma * lam - diag + rho * dual.lam_gamma) ** 2).sum())
    l4 /= 2.0 * rho
    return l1, l2, l3, l4


def al_value(primal: PrimalState, dual: DualState, ctx: SolveContext) -> float:
    """Exact augmented objective: f minus the four penalty blocks."""
    return objective_f(primal, ctx) - sum(penalty_terms(primal, dual, ctx))


def cccp_linearize(primal: PrimalState, dual: DualState, ctx: SolveContext,
                   anchor_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Surrogate gain couplings around anchor_w at the current beamformer.

    Returns (zeta_c, zeta_w) with shapes (U, U, K) and (U, Jt): each entry is
    the nonnegative-part-weighted linearization
    (a + rho*[lam]+) * (2 Re{wbar^H Y Y^H w} - ||wbar^H Y||^2)
    - rho*[-lam]+ * ||w^H Y||^2.
    """
    if anchor_w.shape != primal.w.shape:
        raise ValueError("anchor beamformer shape mismatch")
    rho = dual.rho
    ta = np.einsum("mu,ukm->uk", anchor_w.conj(), ctx.h_eff)
    tw = np.einsum("mu,ukm->uk", primal.w.conj(), ctx.h_eff)
    lin = 2.0 * np.real(ta * tw.conj()) - np.abs(ta) ** 2      # (U, K)
    quad = np.abs(tw) ** 2
    a_pos = primal.mu + rho * np.maximum(dual.lam_mu, 0.0)
    b_neg = rho * np.maximum(-dual.lam_mu, 0.0)
    zeta_c = a_pos * lin[:, None, :] - b_neg * quad[:, None, :]

    if ctx.n_tx:
        ga = np.einsum("mu,ujmn->ujn", anchor_w.conj(), ctx.g_eff)
        gw = np.einsum("mu,ujmn->ujn", primal.w.conj(), ctx.g_eff)
        lin_w = 2.0 * np.real((ga * gw.conj()).sum(axis=-1)) \
            - (np.abs(ga) ** 2).sum(axis=-1)
        quad_w = (np.abs(gw) ** 2).sum(axis=-1)
        a_pos_w = primal.xi + rho * np.maximum(dual.lam_xi, 0.0)
        b_neg_w = rho * np.maximum(-dual.lam_xi, 0.0)
        zeta_w = a_pos_w * lin_w - b_neg_w * quad_w
    else:
        zeta_w = np.zeros((ctx.n_beams, 0))
    return zeta_c, zeta_w


def l3_surrogate(primal: PrimalState, dual: DualState, ctx: SolveContext,
                 anchor_w: np.ndarray) -> float:
    """Convexified third penalty block (upper bound on the exact one)."""
    rho = dual.rho
    zeta_c, zeta_w = cccp_linearize(primal, dual, ctx, anchor_w)
    g2, r2 = stream_gains(primal.w, ctx)
    s = g2 * primal.p[None, :]                               # (U, K)
    x_norm2 = (primal.x ** 2).sum(axis=0)                    # (K,)
    quart = float((x_norm2[None, :] * s ** 2).sum())
    cross = float(np.einsum("uvk,vk,k->", zeta_c, primal.x, primal.p))
    const = float(((rho * dual.lam_mu + primal.mu) ** 2).sum())
    val = quart - 2.0 * cross + const
    if ctx.n_tx:
        val += float(((r2 * ctx.p_w[None, :]) ** 2).sum())
        val += -2.0 * float((ctx.p_w[None, :] * zeta_w).sum())
        val += float(((rho * dual.lam_xi + primal.xi) ** 2).sum())
    return val / (2.0 * rho)


def al_value_cccp(primal: PrimalState, dual: DualState, ctx: SolveContext,
                  anchor_w: np.ndarray) -> float:
    """Surrogate augmented objective maximized by the inner loop."""
    l1, l2, _, l4 = penalty_terms(primal, dual, ctx)
    return objective_f(primal, ctx) - l1 - l2 - l4 \
        - l3_surrogate(primal, dual, ctx, anchor_w)


def residual_families(primal: PrimalState, ctx: SolveContext) -> dict:
    """Equality residual arrays; the violation metric is their largest
    absolute entry (Euclidean norm per beam for the beamformer coupling)."""
    g2, r2 = stream_gains(primal.w, ctx)
    mu_target = primal.x[None, :, :] * g2[:, None, :] * primal.p[None, None, :]
    lam = lambda_big(primal.mu, primal.xi, ctx)
    diag = np.einsum("uuk->uk", primal.mu)
    res = {
        "x_eq_xt": primal.x - primal.xt,
        "x_times_1mxt": primal.x * (1.0 - primal.xt),
        "one_beam": primal.x.sum(axis=0) - 1.0,
        "w_eq_fd": primal.w - primal.fd_cols(),
        "mu_def": primal.mu - mu_target,
        "xi_def": (primal.xi - r2 * ctx.p_w[None, :]
                   if ctx.n_tx else np.zeros((ctx.n_beams, 0))),
        "sinr_def": primal.gamma * lam - diag,
    }
    return res


def violation(primal: PrimalState, ctx: SolveContext) -> float:
    res = residual_families(primal, ctx)
    parts = [
        np.abs(res["x_eq_xt"]).max(initial=0.0),
        np.abs(res["x_times_1mxt"]).max(initial=0.0),
        np.abs(res["one_beam"]).max(initial=0.0),
        np.linalg.norm(res["w_eq_fd"], axis=0).max(initial=0.0),
        np.abs(res["mu_def"]).max(initial=0.0),
        np.abs(res["xi_def"]).max(initial=0.0),
        np.abs(res["sinr_def"]).max(initial=0.0),
    ]
    return float(max(parts))
