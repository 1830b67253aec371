"""Episode orchestration: channel/incumbent realization per beacon interval,
the per-SP observe/solve/transmit/update loop, and Monte-Carlo aggregation.

Determinism: each episode owns three RNG substreams (channels, traffic,
solver) derived from its seed, so the traffic and channel draws of a seed
are identical across policies and repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import BaselineKind, baseline_decision
from .channel import draw_channel_set, make_layout
from .config import Scenario, with_overrides
from .pdd import build_context, solve_sp
from .queues import (ArrivalProcess, QueueState, drift_penalty_terms,
                     realized_drift_penalty, sic_order, step_queues)
from .rates import sinr_and_rate, wigig_interference
from .wigig import build_wigig_state

PDD_POLICY = "pdd_cccp"
POLICIES = (PDD_POLICY, BaselineKind.CHS_HBF_FP.value,
            BaselineKind.CHS_HBF_EP.value)


@dataclass
class SPRecord:
    t: int
    r_total: float            # raw achievable sum rate, bit/s/Hz
    r_user: np.ndarray        # (K,) raw per-user rates
    r_eff: np.ndarray         # (K,) buffer-limited service rates
    i_j: np.ndarray           # per scheduled receiver, mW
    i_total: float            # mW
    q: np.ndarray             # backlog snapshot at decision time
    zc: np.ndarray
    zw: float
    arrivals: np.ndarray
    outer_iters: int
    inner_iters: int
    solver_h: float
    converged: bool
    objective: float
    dp_realized: float        # pathwise drift-plus-penalty
    dp_bound: float           # its upper bound
    infeasible_rmin: list


@dataclass
class EpisodeResult:
    policy: str
    seed: int
    scenario: Scenario
    records: list = field(default_factory=list)
    convergence_rows: list = field(default_factory=list)

    @property
    def mean_se(self) -> float:
        return float(np.mean([r.r_total for r in self.records]))

    @property
    def mean_delay_ms(self) -> float:
        """Little's-law proxy: time-average backlog over arrival rate."""
        lam = self.scenario.arrival_density
        if lam <= 0:
            return 0.0
        q_avg = np.mean([r.q for r in self.records], axis=0)
        return float(np.mean(q_avg / lam) * 1e3)

    @property
    def mean_iw_mw(self) -> float:
        return float(np.mean([r.i_total for r in self.records]))


def run_episode(sc: Scenario, seed: int, policy: str,
                keep_convergence: bool = False) -> EpisodeResult:
    if policy not in POLICIES:
        raise ValueError(f"unknown policy '{policy}' (choose from {POLICIES})")
    rng_channel = np.random.default_rng([seed, 17])
    rng_traffic = np.random.default_rng([seed, 23])
    rng_solver = np.random.default_rng([seed, 41])

    layout = make_layout(rng_channel, sc)
    channels = draw_channel_set(rng_channel, sc, layout)
    wigig = build_wigig_state(rng_channel, sc, sc.n_sp, layout)
    arrivals = ArrivalProcess.from_scenario(sc)
    qbar = sc.queue_targets()
    a_max = arrivals.a_max

    result = EpisodeResult(policy=policy, seed=seed, scenario=sc)
    queues = QueueState.initial(sc.n_users)
    warm = None

    for t in range(sc.n_sp):
        order = sic_order(queues)
        if policy == PDD_POLICY:
            ctx = build_context(sc, channels, wigig, queues, t)
            decision, rep, warm_next = solve_sp(
                ctx, sc, rng_solver, warm if sc.warm_start else None,
                trace_inner=keep_convergence and t == 0)
            warm = warm_next
            outer, inner = rep.outer_iters, int(np.sum(rep.inner_counts))
            h_final, converged = rep.violation, rep.converged
            objective, infeasible = rep.objective, rep.infeasible_rmin
            if keep_convergence and t == 0:
                result.convergence_rows = list(rep.convergence_rows)
        else:
            decision = baseline_decision(BaselineKind(policy), channels,
                                         wigig, sc, t)
            outer = inner = 0
            h_final, converged, objective, infeasible = 0.0, True, np.nan, []

        rr = sinr_and_rate(decision, channels, wigig, order, t, sc)
        i_vec, i_total = wigig_interference(decision, channels, wigig, t)
        r_eff = np.minimum(rr.r_k, queues.q / sc.tau_s)
        dp = drift_penalty_terms(queues, r_eff, i_total, sc.tau_s, sc.v0,
                                 sc.v1, qbar, a_max, sc.i_avg_mw,
                                 sc.i_max_mw, n_rx=len(i_vec))
        a_t = arrivals.draw(rng_traffic, sc.n_users)
        nxt = step_queues(queues, r_eff, sc.tau_s, a_t, i_total,
                          sc.i_avg_mw, qbar)
        realized = realized_drift_penalty(queues, nxt, r_eff, sc.v0, sc.v1)

        if policy == PDD_POLICY and np.isnan(objective):
            objective = dp.reward
        result.records.append(SPRecord(
            t=t, r_total=float(rr.r_k.sum()), r_user=rr.r_k, r_eff=r_eff,
            i_j=i_vec, i_total=i_total, q=queues.q.copy(),
            zc=queues.zc.copy(), zw=queues.zw, arrivals=a_t,
            outer_iters=outer, inner_iters=inner, solver_h=h_final,
            converged=converged, objective=objective,
            dp_realized=realized, dp_bound=dp.bound,
            infeasible_rmin=infeasible))
        queues = nxt
    return result


@dataclass
class AggregateRow:
    policy: str
    n_users: int
    v0: float
    v1: float
    mean_se: float
    ci_se: float
    mean_delay_ms: float
    mean_iw_mw: float


def aggregate(episodes: list[EpisodeResult]) -> AggregateRow:
    se = np.array([e.mean_se for e in episodes])
    delay = np.array([e.mean_delay_ms for e in episodes])
    iw = np.array([e.mean_iw_mw for e in episodes])
    sc = episodes[0].scenario
    ci = 1.96 * float(se.std(ddof=1)) / np.sqrt(len(se)) if len(se) > 1 else 0.0
    return AggregateRow(policy=episodes[0].policy, n_users=sc.n_users,
                        v0=sc.v0, v1=sc.v1, mean_se=float(se.mean()),
                        ci_se=ci, mean_delay_ms=float(delay.mean()),
                        mean_iw_mw=float(iw.mean()))


SWEEP_FIELDS = {"K": "n_users", "V0": "v0", "V1": "v1"}


def run_monte_carlo(sc: Scenario, seeds: list[int], policies: list[str],
                    sweep: tuple[str, list] | None = None,
                    progress=None):
    """Run every (sweep point, policy, seed) episode.

    Returns (aggregate rows, episodes).  Sweep points reuse the same seed
    list so comparisons are paired.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    points = [sc]
    if sweep is not None:
        param, values = sweep
        if param not in SWEEP_FIELDS:
            raise ValueError(f"sweep parameter must be one of {sorted(SWEEP_FIELDS)}")
        field_name = SWEEP_FIELDS[param]
        cast = int if param == "K" else float
        points = [with_overrides(sc, **{field_name: cast(v)}) for v in values]

    rows, episodes = [], []
    for point in points:
        for policy in policies:
            runs = []
            for si, seed in enumerate(seeds):
                ep = run_episode(point, seed, policy,
                                 keep_convergence=(si == 0))
                runs.append(ep)
                episodes.append(ep)
                if progress is not None:
                    progress(point, policy, seed)
            rows.append(aggregate(runs))
    return rows, episodes
