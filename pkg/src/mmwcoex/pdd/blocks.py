"""The five block-coordinate updates of the inner loop.

Each update maximizes the convexified augmented objective over its own
variable block with the others held fixed: grouping plus SINR (per-user
linear system and a quadratic root), power control (box-and-coupling QP via
dual bisection), analog beamforming (per-element unit-modulus sweeps),
fully digital beamforming (per-beam damped gradient descent plus per-AP
least squares), and the auxiliary gains (per-beam SPD linear system) with
the relaxed-grouping copy (clamped closed form).
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from .context import SolveContext
from .state import DualState, PrimalState

LN2 = np.log(2.0)


def anchor_gains(w: np.ndarray, ctx: SolveContext) -> np.ndarray:
    """|w_u^H h_{u,k}|^2 at the linearization anchor."""
    return np.abs(np.einsum("mu,ukm->uk", w.conj(), ctx.h_eff)) ** 2


def zeta_at_anchor(primal: PrimalState, dual: DualState,
                   g2a: np.ndarray) -> np.ndarray:
    """Gain-coupling coefficients evaluated with the beamformer still at the
    anchor, where the linearization is tight: (mu + rho*lam) |w_u^H h|^2."""
    return (primal.mu + dual.rho * dual.lam_mu) * g2a[:, None, :]


# ---- block 1: user grouping and SINR ---------------------------------


def grouping_system(k: int, primal: PrimalState, dual: DualState,
                    ctx: SolveContext, g2a: np.ndarray,
                    zeta_c0: np.ndarray):
    """Per-user linear system whose solution maximizes the surrogate
    augmented objective over that user's grouping column."""
    rho = dual.rho
    U = ctx.n_beams
    s = g2a[:, k] * primal.p[k]
    xt = primal.xt[:, k]
    mat = (float((s ** 2).sum()) + 2.0) * np.eye(U) + np.ones((U, U)) \
        + np.diag(xt ** 2 - 2.0 * xt)
    rhs = (primal.p[k] * zeta_c0[:, :, k].sum(axis=0)
           + (xt - rho * dual.lam_x[:, k])
           + (1.0 - rho * dual.lam_u[k])
           - (1.0 - xt) * rho * dual.lam_xt[:, k])
    return mat, rhs


def _solve_reg(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched solve with a ridge fallback for ill-conditioned systems."""
    try:
        sol = np.linalg.solve(mat, rhs)
        if np.all(np.isfinite(sol)):
            return sol
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(mat.shape[-1])
    return np.linalg.solve(mat + 1e-8 * eye, rhs)


def solve_grouping_sinr(primal: PrimalState, dual: DualState,
                        ctx: SolveContext, g2a: np.ndarray,
                        zeta_c0: np.ndarray) -> None:
    rho = dual.rho
    U, K = ctx.n_beams, ctx.n_users

    s = g2a * primal.p[None, :]
    xt = primal.xt
    mats = np.ones((K, U, U)) + np.eye(U)[None, :, :] * (
        (s ** 2).sum(axis=0)[:, None, None] + 2.0)
    mats[:, np.arange(U), np.arange(U)] += (xt ** 2 - 2.0 * xt).T
    rhs = (primal.p[None, :] * zeta_c0.sum(axis=0)
           + (xt - rho * dual.lam_x)
           + (1.0 - rho * dual.lam_u)[None, :]
           - (1.0 - xt) * rho * dual.lam_xt).T           # (K, U)
    x = _solve_reg(mats, rhs[..., None])[..., 0]         # (K, U)

    # coupling constraints: x_u <= log2(1+gamma)/rmin and sum_u x >= p/pmax;
    # multipliers recovered by projected dual ascent only where violated
    with np.errstate(divide="ignore"):
        cap = np.where(ctx.rmin[None, :] > 0,
                       np.log2(1.0 + np.maximum(primal.gamma, 0.0))
                       / np.where(ctx.rmin > 0, ctx.rmin, 1.0)[None, :],
                       np.inf).T                         # (K, U)
    need = primal.p / ctx.pmax
    bad = np.flatnonzero(np.any(x > cap + 1e-9, axis=1)
                         | (x.sum(axis=1) < need - 1e-9))
    if bad.size:
        kap1 = np.zeros((bad.size, U))
        kap2 = np.zeros(bad.size)
        for it in range(50):
            adj = rho * (-kap1 * ctx.rmin[bad, None]
                         + kap2[:, None] * ctx.pmax)
            xb = _solve_reg(mats[bad], (rhs[bad] + adj)[..., None])[..., 0]
            step = 1.0 / np.sqrt(it + 1.0)
            kap1 = np.maximum(kap1 + step * (xb - cap[bad]), 0.0)
            kap2 = np.maximum(kap2 + step * (need[bad] - xb.sum(axis=1)), 0.0)
        adj = rho * (-kap1 * ctx.rmin[bad, None] + kap2[:, None] * ctx.pmax)
        x[bad] = _solve_reg(mats[bad], (rhs[bad] + adj)[..., None])[..., 0]
    primal.x[:] = x.T

    lam = np.einsum("ukvj,uvj->uk", ctx.smask, primal.mu) + ctx.sigma2
    if ctx.n_tx:
        lam = lam + primal.xi.sum(axis=1)[:, None]
    diag = np.einsum("uuk->uk", primal.mu)
    qt = (rho / LN2) * ctx.w0[None, :]
    e = lam * (rho * dual.lam_gamma - diag)
    lam2 = lam ** 2
    ok = lam2 > 1e-18
    disc = (e - lam2) ** 2 + 4.0 * qt * lam2
    root = np.where(ok, (np.sqrt(disc) - (e + lam2)) / np.where(ok, 2.0 * lam2, 1.0),
                    np.inf)
    lo = np.maximum(primal.x, 0.0) * (np.exp2(ctx.rmin) - 1.0)[None, :]
    hi = np.broadcast_to(ctx.gamma_max[None, :], root.shape)
    lo = np.minimum(lo, hi)
    primal.gamma[:] = np.clip(root, lo, hi)


# ---- block 2: power control -------------------------------------------


def solve_power(primal: PrimalState, dual: DualState, ctx: SolveContext,
                g2a: np.ndarray, zeta_c0: np.ndarray,
                x: np.ndarray | None = None) -> np.ndarray:
    """Exact maximizer of the separable quadratic over the power box with
    the per-receiver interference couplings, via closed-form powers and
    coordinate-wise dual bisection on the coupling multipliers."""
    rho = dual.rho
    if x is None:
        x = primal.x
    q4 = (g2a ** 2).sum(axis=0)
    dcoef = (x ** 2).sum(axis=0) * q4
    z = np.einsum("uvk,vk->k", zeta_c0, x)
    g_k = ctx.a_rx.sum(axis=0) if ctx.n_rx else np.zeros(ctx.n_users)
    pmax_k = np.maximum(x.sum(axis=0), 0.0) * ctx.pmax

    def p_of(kap: np.ndarray) -> np.ndarray:
        load = kap @ ctx.a_rx if ctx.n_rx else 0.0
        num = z - rho * (ctx.w1 * g_k + load)
        interior = np.divide(num, dcoef, out=np.zeros_like(num),
                             where=dcoef > 0)
        p = np.where(dcoef > 0, interior, np.where(num > 0, pmax_k, 0.0))
        return np.clip(p, 0.0, pmax_k)

    kap = np.zeros(ctx.n_rx)
    p = p_of(kap)
    if ctx.n_rx:
        loads = ctx.a_rx @ p
        if np.any(loads > ctx.i_cap + 1e-12):
            for _ in range(60):
                for j in range(ctx.n_rx):
                    kap[j] = 0.0
                    if ctx.a_rx[j] @ p_of(kap) <= ctx.i_cap:
                        continue
                    hi = 1.0
                    while ctx.a_rx[j] @ p_of(_with(kap, j, hi)) > ctx.i_cap:
                        hi *= 4.0
                        if hi > 1e24:
                            break
                    lo = 0.0
                    for _b in range(80):
                        mid = 0.5 * (lo + hi)
                        if ctx.a_rx[j] @ p_of(_with(kap, j, mid)) > ctx.i_cap:
                            lo = mid
                        else:
                            hi = mid
                    kap[j] = hi
                p = p_of(kap)
                loads = ctx.a_rx @ p
                feas = float(np.maximum(loads - ctx.i_cap, 0.0).max())
                comp = float(np.abs(kap * (ctx.i_cap - loads)).max())
                if feas <= 1e-11 and comp <= 1e-9 * max(1.0, float(np.abs(kap).max())):
                    break
    primal.p[:] = p
    return kap


def _with(vec: np.ndarray, j: int, val: float) -> np.ndarray:
    out = vec.copy()
    out[j] = val
    return out


# ---- block 3: analog beamforming --------------------------------------


def abf_objective(f: np.ndarray, dt: np.ndarray, c: np.ndarray) -> float:
    """Quadratic fit objective Tr(F^H F Dt) - 2 Re Tr(F^H C)."""
    return float(np.real(np.trace(f.conj().T @ f @ dt))
                 - 2.0 * np.real(np.trace(f.conj().T @ c)))


def solve_analog_bf(primal: PrimalState, dual: DualState, ctx: SolveContext,
                    n_abf_max: int, tol: float) -> list:
    """Per-element unit-modulus sweeps; each element update is the exact
    argmin, so the objective is non-increasing sweep over sweep.  Entries in
    one column decouple, so each column's elements update in one vector op.

    Returns the per-AP objective traces (one value per sweep).
    """
    rho = dual.rho
    n0 = ctx.n0
    traces = []
    for i in range(primal.f.shape[0]):
        cols = slice(i * n0, (i + 1) * n0)
        di = primal.d[i]
        dt = di @ di.conj().T
        c = (primal.w[:, cols] + rho * dual.lam_w[:, cols]) @ di.conj().T
        f = primal.f[i]
        umat = f @ dt
        trace = []
        prev = None
        for _ in range(n_abf_max):
            for n in range(n0):
                b = f[:, n] * dt[n, n].real - umat[:, n] + c[:, n]
                nz = np.abs(b) > 0.0
                new = f[:, n].copy()
                new[nz] = b[nz] / np.abs(b[nz])
                umat += np.outer(new - f[:, n], dt[n, :])
                f[:, n] = new
            obj = abf_objective(f, dt, c)
            trace.append(obj)
            if prev is not None and abs(prev - obj) <= tol:
                break
            prev = obj
        traces.append(trace)
    return traces


# ---- block 4: fully digital and digital beamforming --------------------


def w_objective_grad(w: np.ndarray, u: int, primal: PrimalState,
                     dual: DualState, ctx: SolveContext,
                     anchor: np.ndarray, want_grad: bool = True):
    """Per-beam convex objective of the beamformer subproblem and its
    gradient with respect to the stacked real/imaginary parts (packed as a
    complex vector: d/dRe + j d/dIm)."""
    prob = _WProblem(u, primal, dual, ctx, anchor, primal.fd_cols())
    val, grad = prob.value(w, want_grad)
    scale = 1.0 / (2.0 * dual.rho)
    return val * scale, (grad * scale if grad is not None else None)


class _WProblem:
    """Loop-invariant data of one beam's beamformer subproblem, on the
    natural scale (the exact objective times 2 rho, so tolerances do not
    depend on the penalty parameter)."""

    def __init__(self, u: int, primal: PrimalState, dual: DualState,
                 ctx: SolveContext, anchor: np.ndarray, fd: np.ndarray):
        rho = dual.rho
        self.center = fd[:, u] - rho * dual.lam_w[:, u]
        a_pos = primal.mu[u] + rho * np.maximum(dual.lam_mu[u], 0.0)
        b_neg = rho * np.maximum(-dual.lam_mu[u], 0.0)
        self.alpha = np.einsum("vk,vk->k", a_pos, primal.x)
        self.beta = np.einsum("vk,vk->k", b_neg, primal.x)
        self.ak = (primal.x ** 2).sum(axis=0) * primal.p ** 2
        self.p = primal.p
        self.hc = ctx.h_eff[u].conj()                 # (K, M0)
        self.ht = ctx.h_eff[u].T                      # (M0, K), columns h_k
        self.ta = self.hc @ anchor[:, u]
        self.lin_const = -np.abs(self.ta) ** 2
        self.n_tx = ctx.n_tx
        if ctx.n_tx:
            G = ctx.g_eff[u]
            self.gc = G.conj()                        # (Jt, M0, Na)
            self.g = G
            self.tag = np.einsum("jmn,m->jn", self.gc, anchor[:, u])
            self.lin_const_g = -(np.abs(self.tag) ** 2).sum(axis=1)
            self.aw = primal.xi[u] + rho * np.maximum(dual.lam_xi[u], 0.0)
            self.bw = rho * np.maximum(-dual.lam_xi[u], 0.0)
            self.pw = ctx.p_w

    def value(self, w: np.ndarray, want_grad: bool = True):
        tw = self.hc @ w
        q = np.abs(tw) ** 2
        lin = 2.0 * np.real(np.conj(self.ta) * tw) + self.lin_const
        val = float(np.real((w - self.center).conj() @ (w - self.center)))
        val += float((self.ak * q ** 2 + 2.0 * self.p * self.beta * q
                      - 2.0 * self.p * self.alpha * lin).sum())
        if self.n_tx:
            twg = np.einsum("jmn,m->jn", self.gc, w)
            r = (np.abs(twg) ** 2).sum(axis=1)
            lin_g = 2.0 * np.real((np.conj(self.tag) * twg).sum(axis=1)) \
                + self.lin_const_g
            val += float(((self.pw * r) ** 2 + 2.0 * self.pw * self.bw * r
                          - 2.0 * self.pw * self.aw * lin_g).sum())
        if not want_grad:
            return val, None
        grad = 2.0 * (w - self.center)
        grad += self.ht @ (4.0 * (self.ak * q + self.p * self.beta) * tw
                           - 4.0 * self.p * self.alpha * self.ta)
        if self.n_tx:
            coef = 4.0 * (self.pw ** 2 * r + self.pw * self.bw)
            grad += np.einsum("jmn,jn->m", self.g, coef[:, None] * twg)
            grad -= np.einsum("jmn,jn->m", self.g,
                              (4.0 * self.pw * self.aw)[:, None] * self.tag)
        return val, grad


def _descend_w(prob: _WProblem, w0: np.ndarray, tol: float,
               max_steps: int) -> np.ndarray:
    """Damped gradient descent with Armijo backtracking (c = 1e-4) and a
    Barzilai-Borwein step proposal."""
    w = w0.copy()
    fv, g = prob.value(w)
    step = 0.45                      # near 1/L of the coupling quadratic
    for _ in range(max_steps):
        gn2 = float(np.real(g.conj() @ g))
        if np.sqrt(gn2) <= tol:
            break
        while True:
            w_new = w - step * g
            f_new, _ = prob.value(w_new, want_grad=False)
            if f_new <= fv - 1e-4 * step * gn2 or step < 1e-18:
                break
            step *= 0.5
        if step < 1e-18:
            break
        _, g_new = prob.value(w_new)
        s = w_new - w
        y = g_new - g
        sy = float(np.real(s.conj() @ y))
        step = float(np.real(s.conj() @ s)) / sy if sy > 1e-30 else step * 2.0
        step = float(np.clip(step, 1e-12, 1e9))
        w, fv, g = w_new, f_new, g_new
    return w


def solve_digital_bf(primal: PrimalState, dual: DualState, ctx: SolveContext,
                     anchor: np.ndarray, tol: float, max_steps: int) -> None:
    """Inexact beamformer update (per-beam descent) followed by the exact
    per-AP least-squares digital stage."""
    fd = primal.fd_cols()
    for u in range(ctx.n_beams):
        prob = _WProblem(u, primal, dual, ctx, anchor, fd)
        primal.w[:, u] = _descend_w(prob, primal.w[:, u], tol, max_steps)
    rho = dual.rho
    n0 = ctx.n0
    for i in range(primal.f.shape[0]):
        cols = slice(i * n0, (i + 1) * n0)
        f = primal.f[i]
        target = primal.w[:, cols] + rho * dual.lam_w[:, cols]
        gram = f.conj().T @ f
        rhs = f.conj().T @ target
        try:
            primal.d[i] = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            primal.d[i] = np.linalg.solve(
                gram + 1e-10 * np.eye(n0), rhs)


# ---- block 5: auxiliary gains and the grouping copy ---------------------


def solve_aux(primal: PrimalState, dual: DualState, ctx: SolveContext,
              anchor: np.ndarray) -> None:
    """Exact solve of the strictly convex auxiliary-gain subproblem per
    receiving beam (nonnegative gains: they stand in for squared channel
    magnitudes, and the convexified coupling is only a minorant on the
    nonnegative orthant), then the clamped closed form of the grouping copy.
    """
    rho = dual.rho
    U, K, Jt = ctx.n_beams, ctx.n_users, ctx.n_tx
    n = U * K + Jt

    ta = np.einsum("mu,ukm->uk", anchor.conj(), ctx.h_eff)
    tw = np.einsum("mu,ukm->uk", primal.w.conj(), ctx.h_eff)
    g2a = np.abs(ta) ** 2
    cross = np.real(ta * tw.conj())
    s_c = rho * dual.lam_mu + primal.x[None, :, :] * primal.p[None, None, :] \
        * (g2a - 2.0 * cross)[:, None, :]
    if Jt:
        tag = np.einsum("mu,ujmn->ujn", anchor.conj(), ctx.g_eff)
        twg = np.einsum("mu,ujmn->ujn", primal.w.conj(), ctx.g_eff)
        r2a = (np.abs(tag) ** 2).sum(axis=-1)
        cross_g = np.real((tag * twg.conj()).sum(axis=-1))
        s_w = rho * dual.lam_xi + ctx.p_w[None, :] * (r2a - 2.0 * cross_g)

    for u in range(U):
        cmat = np.zeros((K, n))
        cmat[:, :U * K] = (ctx.smask[u].reshape(K, U * K)
                           * primal.gamma[u][:, None])
        cmat[np.arange(K), u * K + np.arange(K)] = -1.0
        if Jt:
            cmat[:, U * K:] = primal.gamma[u][:, None]
        b = rho * dual.lam_gamma[u] + primal.gamma[u] * ctx.sigma2
        amat = np.eye(n) + cmat.T @ cmat
        rhs = -(np.concatenate([s_c[u].ravel(), s_w[u]]) if Jt
                else s_c[u].ravel()) - cmat.T @ b
        sol = _nonneg_quadratic(amat, rhs)
        primal.mu[u] = sol[:U * K].reshape(U, K)
        if Jt:
            primal.xi[u] = sol[U * K:]

    x = primal.x
    raw = (x * (x + 1.0) + rho * (dual.lam_x + dual.lam_xt * x)) / (1.0 + x ** 2)
    primal.xt[:] = np.clip(raw, 0.0, 1.0)


def _nonneg_quadratic(amat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """argmin 0.5 z^T A z - rhs^T z s.t. z >= 0, for SPD A (exact active-set
    solve via a nonnegative least-squares reformulation)."""
    try:
        sol = np.linalg.solve(amat, rhs)
        if sol.min(initial=0.0) >= 0.0:
            return sol
        chol = np.linalg.cholesky(amat)          # A = L L^T
        target = np.linalg.solve(chol, rhs)      # ||L^T z - target||^2
        sol, _ = optimize.nnls(chol.T, target)
        return sol
    except np.linalg.LinAlgError:
        sol = np.linalg.solve(amat + 1e-10 * np.eye(amat.shape[0]), rhs)
        return np.maximum(sol, 0.0)
