"""Dual-loop solver: inner block-coordinate passes over the convexified
augmented objective, outer multiplier/penalty updates driven by the
equality-violation metric, and binary rounding with a feasibility-restoring
power re-solve.
"""

from __future__ import annotations

import time

import numpy as np

from ..config import Scenario
from ..rates import Decision
from .al import al_value_cccp, residual_families, violation
from .blocks import (anchor_gains, solve_analog_bf, solve_aux,
                     solve_digital_bf, solve_grouping_sinr, solve_power,
                     zeta_at_anchor)
from .context import SolveContext, p2_objective, stream_gains
from .state import DualState, PrimalState, SolverReport

RHO_FLOOR = 1e-10


def initialize(ctx: SolveContext, sc: Scenario,
               rng: np.random.Generator) -> PrimalState:
    """Feasible start: random unit-modulus phases, identity digital stage,
    nearest-beam assignment, half power scaled into the interference cap,
    auxiliaries set consistently so every equality holds at the start."""
    U, K, M0 = ctx.n_beams, ctx.n_users, ctx.m0
    I = U // ctx.n0
    f = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(I, M0, ctx.n0)))
    d = np.stack([np.eye(ctx.n0, dtype=complex) for _ in range(I)])
    primal = PrimalState(
        x=np.zeros((U, K)), xt=np.zeros((U, K)), f=f, d=d,
        p=np.full(K, 0.5 * ctx.pmax), w=np.zeros((M0, U), dtype=complex),
        gamma=np.zeros((U, K)), mu=np.zeros((U, U, K)),
        xi=np.zeros((U, ctx.n_tx)))
    primal.w = primal.fd_cols()
    g2, _ = stream_gains(primal.w, ctx)
    best = np.argmax(g2, axis=0)
    primal.x[best, np.arange(K)] = 1.0
    _rescale_power(primal, ctx, margin=0.999)
    refresh_aux(primal, ctx)
    primal.xt[:] = primal.x
    return primal


def refresh_aux(primal: PrimalState, ctx: SolveContext) -> None:
    """Set mu, xi, gamma to their defining values at the current (x, w, p)."""
    g2, r2 = stream_gains(primal.w, ctx)
    primal.mu = primal.x[None, :, :] * g2[:, None, :] * primal.p[None, None, :]
    primal.xi = r2 * ctx.p_w[None, :] if ctx.n_tx else np.zeros((ctx.n_beams, 0))
    lam = np.einsum("ukvj,uvj->uk", ctx.smask, primal.mu) + ctx.sigma2
    if ctx.n_tx:
        lam = lam + primal.xi.sum(axis=1)[:, None]
    primal.gamma = np.einsum("uuk->uk", primal.mu) / lam


def _rescale_power(primal: PrimalState, ctx: SolveContext,
                   margin: float = 1.0) -> None:
    if ctx.n_rx == 0:
        return
    per_user = np.maximum(primal.x.sum(axis=0), 0.0) * primal.p
    loads = ctx.a_rx @ per_user
    worst = float(loads.max(initial=0.0))
    if worst > ctx.i_cap * margin:
        primal.p *= ctx.i_cap * margin / worst


def inner_iteration(primal: PrimalState, dual: DualState, ctx: SolveContext,
                    sc: Scenario, timing: dict) -> None:
    """One pass over the five blocks, with the convexification re-anchored
    at the incoming beamformer iterate."""
    anchor = primal.w.copy()
    g2a = anchor_gains(anchor, ctx)
    zeta_c0 = zeta_at_anchor(primal, dual, g2a)

    t0 = time.perf_counter()
    solve_grouping_sinr(primal, dual, ctx, g2a, zeta_c0)
    t1 = time.perf_counter()
    solve_power(primal, dual, ctx, g2a, zeta_c0)
    t2 = time.perf_counter()
    solve_analog_bf(primal, dual, ctx, sc.n_abf_max, sc.abf_tol)
    t3 = time.perf_counter()
    solve_digital_bf(primal, dual, ctx, anchor, sc.w_grad_tol, sc.w_max_steps)
    t4 = time.perf_counter()
    solve_aux(primal, dual, ctx, anchor)
    t5 = time.perf_counter()
    for key, dt in zip(("grouping", "power", "analog", "digital", "aux"),
                       np.diff([t0, t1, t2, t3, t4, t5])):
        timing[key] = timing.get(key, 0.0) + float(dt)


def outer_update(primal: PrimalState, dual: DualState, ctx: SolveContext,
                 h: float) -> DualState:
    """Multiplier step with stride 1/rho when the violation cleared the
    threshold (which then tracks 0.9 h), penalty shrink otherwise.

    The threshold moves only on multiplier steps: retargeting it after
    penalty steps as well would chase 0.9 h from below and freeze the
    multipliers for good whenever the violation plateaus.
    """
    nxt = dual.copy()
    if h <= dual.delta:
        res = residual_families(primal, ctx)
        inv = 1.0 / dual.rho
        nxt.lam_x = dual.lam_x + inv * res["x_eq_xt"]
        nxt.lam_xt = dual.lam_xt + inv * res["x_times_1mxt"]
        nxt.lam_u = dual.lam_u + inv * res["one_beam"]
        nxt.lam_w = dual.lam_w + inv * res["w_eq_fd"]
        nxt.lam_mu = dual.lam_mu + inv * res["mu_def"]
        nxt.lam_xi = dual.lam_xi + inv * res["xi_def"]
        nxt.lam_gamma = dual.lam_gamma + inv * res["sinr_def"]
        nxt.delta = 0.9 * h
    else:
        nxt.rho = max(dual.eta * dual.rho, RHO_FLOOR)
    return nxt


def round_grouping(x: np.ndarray) -> np.ndarray:
    """One-hot argmax per user; ties resolve to the lowest beam index."""
    out = np.zeros_like(x)
    out[np.argmax(x, axis=0), np.arange(x.shape[1])] = 1.0
    return out


def solve_sp(ctx: SolveContext, sc: Scenario, rng: np.random.Generator,
             warm=None, trace_inner: bool = False):
    """Full dual-loop solve of one SP's scheduling problem.

    Returns (decision, report, warm_state); warm_state is the pre-rounding
    (primal, dual) pair for reuse as the next SP's starting point.
    trace_inner additionally records (outer, inner, objective, violation)
    rows for the convergence table, at the price of one extra residual
    evaluation per inner pass.
    """
    report = SolverReport(dropped_rmin=np.flatnonzero(ctx.dropped_rmin).tolist())
    timing: dict = {}

    primal = None
    dual = None
    if warm is not None:
        warm_primal, warm_dual = warm
        if _warm_compatible(warm_primal, ctx):
            primal = warm_primal.copy()
            refresh_aux(primal, ctx)
            primal.xt[:] = np.clip(primal.x, 0.0, 1.0)
            _rescale_power(primal, ctx, margin=0.999)
            dual = warm_dual.copy()
            dual.delta = max(dual.delta, sc.eps2 * 10.0)
    if primal is None:
        primal = initialize(ctx, sc, rng)
    if dual is None:
        dual = DualState.zeros(ctx.n_beams, ctx.n_users, ctx.m0, ctx.n_tx,
                               rho=sc.rho0, delta=sc.delta0, eta=sc.eta)

    h = violation(primal, ctx)
    for outer in range(sc.max_outer):
        prev_al = None
        inner_n = 0
        al = np.nan
        for inner_n in range(1, sc.n_bcu_max + 1):
            inner_iteration(primal, dual, ctx, sc, timing)
            al = al_value_cccp(primal, dual, ctx, primal.w)
            report.al_trace.append(al)
            if trace_inner:
                report.convergence_rows.append(
                    (outer, inner_n, al, violation(primal, ctx)))
            if prev_al is not None and abs(al - prev_al) <= sc.eps1:
                break
            prev_al = al
        report.inner_counts.append(inner_n)
        h = violation(primal, ctx)
        report.h_trace.append(h)
        if h < sc.eps2:
            report.converged = True
            break
        dual = outer_update(primal, dual, ctx, h)
    report.outer_iters = len(report.h_trace)
    report.violation = h

    warm_state = (primal.copy(), dual.copy())

    # binary rounding and a feasibility-restoring power re-solve
    primal.x = round_grouping(primal.x)
    g2a = anchor_gains(primal.w, ctx)
    zeta_c0 = zeta_at_anchor(primal, dual, g2a)
    solve_power(primal, dual, ctx, g2a, zeta_c0)
    primal.p = np.clip(primal.p, 0.0, ctx.pmax)
    _rescale_power(primal, ctx, margin=1.0)

    decision = Decision(x=primal.x.copy(), f=primal.f.copy(),
                        d=primal.d.copy(), p=primal.p.copy())
    w_fd = decision.w_eff()
    decision.p = _polish_power_scale(decision, w_fd, ctx)
    primal.p = decision.p.copy()
    report.objective, r_uk, _ = p2_objective(primal.x, primal.p, w_fd, ctx)
    achieved = r_uk.sum(axis=0)
    report.infeasible_rmin = [
        int(k) for k in range(ctx.n_users)
        if ctx.rmin[k] > 0 and achieved[k] < ctx.rmin[k] - 1e-9]
    report.block_time = timing
    return decision, report, warm_state


def _polish_power_scale(decision: Decision, w_fd: np.ndarray,
                        ctx: SolveContext) -> np.ndarray:
    """Scan a common power scale on the true one-SP objective, keeping the
    box and the interference cap; never worse than the incoming point."""
    p0 = decision.p
    if p0.max(initial=0.0) <= 0.0:
        return p0
    best_p, best_val = p0, p2_objective(decision.x, p0, w_fd, ctx)[0]
    s_hi = ctx.pmax / p0.max()
    for s in np.linspace(0.05, max(s_hi, 1.0), 64):
        p_try = np.clip(p0 * s, 0.0, ctx.pmax)
        if ctx.n_rx:
            load = float((ctx.a_rx @ (decision.x.sum(axis=0) * p_try))
                         .max(initial=0.0))
            if load > ctx.i_cap:
                p_try = p_try * (ctx.i_cap / load)
        val = p2_objective(decision.x, p_try, w_fd, ctx)[0]
        if val > best_val:
            best_p, best_val = p_try, val
    return best_p


def _warm_compatible(warm: PrimalState, ctx: SolveContext) -> bool:
    return (warm.w.shape == (ctx.m0, ctx.n_beams)
            and warm.x.shape == (ctx.n_beams, ctx.n_users)
            and warm.xi.shape[1] == ctx.n_tx)
