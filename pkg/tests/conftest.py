"""Shared fixtures: small random solver states and independent oracles.

The oracle implementations here are deliberately written as plain loops
over the defining formulas, duplicating nothing from the package's
vectorized code paths.
"""

import numpy as np
import pytest

from mmwcoex.pdd.context import SolveContext
from mmwcoex.pdd.state import DualState, PrimalState


def random_context(rng, n_beams=2, n_users=3, m0=4, n_tx=1, n_rx=2,
                   n0=None):
    """Small synthetic context with O(1) gains and a random decode order."""
    n0 = n0 or n_beams
    order = rng.permutation(n_users)
    pos = np.empty(n_users, dtype=int)
    pos[order] = np.arange(n_users)
    smask = np.zeros((n_beams, n_users, n_beams, n_users), dtype=bool)
    for u in range(n_beams):
        for k in range(n_users):
            for v in range(n_beams):
                for j in range(n_users):
                    if u == v and pos[j] > pos[k]:
                        smask[u, k, v, j] = True
                    elif u != v and j != k:
                        smask[u, k, v, j] = True
    na = 2
    return SolveContext(
        h_eff=(rng.standard_normal((n_beams, n_users, m0))
               + 1j * rng.standard_normal((n_beams, n_users, m0))) / np.sqrt(m0),
        g_eff=(rng.standard_normal((n_beams, n_tx, m0, na))
               + 1j * rng.standard_normal((n_beams, n_tx, m0, na))) / np.sqrt(m0),
        p_w=rng.uniform(0.5, 2.0, size=n_tx),
        a_rx=rng.uniform(0.0, 0.3, size=(n_rx, n_users)),
        i_cap=1.5,
        w0=rng.uniform(1.0, 3.0, size=n_users),
        w1=float(rng.uniform(0.0, 0.5)),
        pmax=10.0,
        rmin=np.full(n_users, 0.1),
        gamma_max=np.full(n_users, 50.0),
        smask=smask,
        beam_ap=np.arange(n_beams) // n0,
        n0=n0,
        sigma2=1.0,
        sigma2_phys=1.0,
        tau=0.0256,
        v0=1.0,
        v1=1.0,
        zw=0.0,
        qzc=rng.uniform(0.0, 1.0, size=n_users),
        rate_cap=np.full(n_users, 50.0),
        dropped_rmin=np.zeros(n_users, dtype=bool),
    )


def random_primal(rng, ctx, nonneg=True):
    U, K, M0 = ctx.n_beams, ctx.n_users, ctx.m0
    I = U // ctx.n0
    x = rng.uniform(0.0, 1.0, size=(U, K))
    primal = PrimalState(
        x=x,
        xt=rng.uniform(0.0, 1.0, size=(U, K)),
        f=np.exp(1j * rng.uniform(0, 2 * np.pi, size=(I, M0, ctx.n0))),
        d=(rng.standard_normal((I, ctx.n0, ctx.n0))
           + 1j * rng.standard_normal((I, ctx.n0, ctx.n0))) / np.sqrt(ctx.n0),
        p=rng.uniform(0.0, ctx.pmax, size=K),
        w=(rng.standard_normal((M0, U)) + 1j * rng.standard_normal((M0, U))),
        gamma=rng.uniform(0.0, 3.0, size=(U, K)),
        mu=rng.uniform(0.0, 2.0, size=(U, U, K)),
        xi=rng.uniform(0.0, 2.0, size=(U, ctx.n_tx)),
    )
    if not nonneg:
        primal.mu = rng.normal(0.0, 1.0, size=(U, U, K))
        primal.xi = rng.normal(0.0, 1.0, size=(U, ctx.n_tx))
    return primal


def random_dual(rng, ctx, rho=0.5):
    U, K = ctx.n_beams, ctx.n_users
    return DualState(
        lam_u=rng.normal(0, 0.3, size=K),
        lam_x=rng.normal(0, 0.3, size=(U, K)),
        lam_xt=rng.normal(0, 0.3, size=(U, K)),
        lam_w=(rng.normal(0, 0.3, size=(ctx.m0, U))
               + 1j * rng.normal(0, 0.3, size=(ctx.m0, U))),
        lam_mu=rng.normal(0, 0.3, size=(U, U, K)),
        lam_xi=rng.normal(0, 0.3, size=(U, ctx.n_tx)),
        lam_gamma=rng.normal(0, 0.3, size=(U, K)),
        rho=rho, delta=1.0, eta=0.7)


# ---- independent loop-based evaluation of the augmented objective -------


def oracle_al_value(primal, dual, ctx):
    """Term-by-term re-derivation of the augmented objective with explicit
    loops; kept independent of the package's vectorized implementation."""
    U, K, Jt = ctx.n_beams, ctx.n_users, ctx.n_tx
    rho = dual.rho

    def wh(u, k):
        return np.vdot(primal.w[:, u], ctx.h_eff[u, k])   # w^H h

    def wg_norm2(u, j):
        row = primal.w[:, u].conj() @ ctx.g_eff[u, j]
        return float(np.real(row @ row.conj()))

    f = 0.0
    for k in range(K):
        for u in range(U):
            f += ctx.w0[k] * np.log2(1.0 + primal.gamma[u, k])
    for k in range(K):
        charge = 0.0
        for j in range(ctx.n_rx):
            charge += ctx.a_rx[j, k]
        f -= ctx.w1 * charge * primal.p[k]

    l1 = 0.0
    for k in range(K):
        tot = sum(primal.x[u, k] for u in range(U))
        l1 += (tot - 1.0 + rho * dual.lam_u[k]) ** 2
        for u in range(U):
            l1 += (primal.x[u, k] - primal.xt[u, k] + rho * dual.lam_x[u, k]) ** 2
            l1 += (primal.x[u, k] * (1.0 - primal.xt[u, k])
                   + rho * dual.lam_xt[u, k]) ** 2
    l1 /= 2.0 * rho

    l2 = 0.0
    for u in range(U):
        i = u // ctx.n0
        col = primal.f[i] @ primal.d[i][:, u % ctx.n0]
        diff = primal.w[:, u] - col + rho * dual.lam_w[:, u]
        l2 += float(np.real(np.vdot(diff, diff)))
    l2 /= 2.0 * rho

    l3 = 0.0
    for u in range(U):
        for k in range(K):
            gain = abs(wh(u, k)) ** 2 * primal.p[k]
            for v in range(U):
                l3 += (primal.mu[u, v, k] - primal.x[v, k] * gain
                       + rho * dual.lam_mu[u, v, k]) ** 2
        for j in range(Jt):
            l3 += (primal.xi[u, j] - wg_norm2(u, j) * ctx.p_w[j]
                   + rho * dual.lam_xi[u, j]) ** 2
    l3 /= 2.0 * rho

    l4 = 0.0
    for u in range(U):
        for k in range(K):
            acc = ctx.sigma2
            for v in range(U):
                for j in range(K):
                    if ctx.smask[u, k, v, j]:
                        acc += primal.mu[u, v, j]
            for j in range(Jt):
                acc += primal.xi[u, j]
            l4 += (primal.gamma[u, k] * acc - primal.mu[u, u, k]
                   + rho * dual.lam_gamma[u, k]) ** 2
    l4 /= 2.0 * rho
    return f - l1 - l2 - l3 - l4


def oracle_al_surrogate(primal, dual, ctx, anchor):
    """Loop-based convexified objective: exact blocks except the gain
    coupling, which uses the anchored linearization of Lemma-style bounds."""
    U, K, Jt = ctx.n_beams, ctx.n_users, ctx.n_tx
    rho = dual.rho
    exact = oracle_al_value(primal, dual, ctx)

    # replace the exact third penalty block with the surrogate
    l3 = 0.0
    for u in range(U):
        for k in range(K):
            gain = abs(np.vdot(primal.w[:, u], ctx.h_eff[u, k])) ** 2 \
                * primal.p[k]
            for v in range(U):
                l3 += (primal.mu[u, v, k] - primal.x[v, k] * gain
                       + rho * dual.lam_mu[u, v, k]) ** 2
        for j in range(Jt):
            row = primal.w[:, u].conj() @ ctx.g_eff[u, j]
            r2 = float(np.real(row @ row.conj()))
            l3 += (primal.xi[u, j] - r2 * ctx.p_w[j]
                   + rho * dual.lam_xi[u, j]) ** 2
    l3 /= 2.0 * rho

    l3_hat = 0.0
    for u in range(U):
        for k in range(K):
            tw = np.vdot(primal.w[:, u], ctx.h_eff[u, k])
            ta = np.vdot(anchor[:, u], ctx.h_eff[u, k])
            q = abs(tw) ** 2
            lin = 2.0 * np.real(np.conj(ta) * tw) - abs(ta) ** 2
            gain = q * primal.p[k]
            norm2x = sum(primal.x[v, k] ** 2 for v in range(U))
            l3_hat += norm2x * gain ** 2
            for v in range(U):
                lam = dual.lam_mu[u, v, k]
                zeta = (primal.mu[u, v, k] + rho * max(lam, 0.0)) * lin \
                    - rho * max(-lam, 0.0) * q
                l3_hat += -2.0 * zeta * primal.x[v, k] * primal.p[k]
                l3_hat += (rho * lam + primal.mu[u, v, k]) ** 2
        for j in range(Jt):
            row_w = primal.w[:, u].conj() @ ctx.g_eff[u, j]
            row_a = anchor[:, u].conj() @ ctx.g_eff[u, j]
            r = float(np.real(row_w @ row_w.conj()))
            lin = 2.0 * np.real(row_a @ row_w.conj()) \
                - float(np.real(row_a @ row_a.conj()))
            lam = dual.lam_xi[u, j]
            zeta = (primal.xi[u, j] + rho * max(lam, 0.0)) * lin \
                - rho * max(-lam, 0.0) * r
            l3_hat += (r * ctx.p_w[j]) ** 2
            l3_hat += -2.0 * ctx.p_w[j] * zeta
            l3_hat += (rho * lam + primal.xi[u, j]) ** 2
    l3_hat /= 2.0 * rho
    return exact + l3 - l3_hat


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
