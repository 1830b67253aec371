"""Result persistence: delimited trace/aggregate/convergence tables plus
rendered figures next to them.

Every emitted number is checked finite; a NaN or infinity anywhere aborts
the write with a diagnostic naming the offending column.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .config import mw_to_dbm  # noqa: E402
from .sim import AggregateRow, EpisodeResult  # noqa: E402

TRACE_HEADER = ["t", "policy", "seed", "R_total", "I_w_dBm", "max_Q",
                "max_Zc", "Zw", "solver_outer_iters", "solver_h"]
AGG_HEADER = ["policy", "K", "V0", "V1", "mean_se", "ci_se",
              "mean_delay_ms", "mean_Iw_dBm"]
CONV_HEADER = ["outer_iter", "inner_iter", "al_value", "h"]


def _check_finite(row: dict, path: str) -> None:
    for key, val in row.items():
        if isinstance(val, (int, float, np.floating, np.integer)):
            if not np.isfinite(val):
                raise RuntimeError(f"non-finite value for '{key}' while writing {path}")


def _write_csv(path: str, header: list[str], rows: list[dict]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            for row in rows:
                _check_finite(row, path)
                writer.writerow(row)
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc}") from exc


def emit_results(episodes: list[EpisodeResult], agg_rows: list[AggregateRow],
                 out_dir: str, figures: bool = True) -> dict:
    """Write trace/aggregate/convergence tables (and figures) into out_dir.

    Returns a mapping of logical names to file paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    trace_rows = []
    for ep in episodes:
        for rec in ep.records:
            trace_rows.append({
                "t": rec.t, "policy": ep.policy, "seed": ep.seed,
                "R_total": rec.r_total,
                "I_w_dBm": mw_to_dbm(rec.i_total),
                "max_Q": float(rec.q.max()), "max_Zc": float(rec.zc.max()),
                "Zw": rec.zw, "solver_outer_iters": rec.outer_iters,
                "solver_h": rec.solver_h,
            })
    paths["trace"] = os.path.join(out_dir, "trace.csv")
    _write_csv(paths["trace"], TRACE_HEADER, trace_rows)

    agg = []
    for row in agg_rows:
        agg.append({
            "policy": row.policy, "K": row.n_users, "V0": row.v0,
            "V1": row.v1, "mean_se": row.mean_se, "ci_se": row.ci_se,
            "mean_delay_ms": row.mean_delay_ms,
            "mean_Iw_dBm": mw_to_dbm(row.mean_iw_mw),
        })
    paths["aggregate"] = os.path.join(out_dir, "aggregate.csv")
    _write_csv(paths["aggregate"], AGG_HEADER, agg)

    conv_rows = []
    for ep in episodes:
        if ep.convergence_rows:
            conv_rows = [{"outer_iter": o, "inner_iter": i,
                          "al_value": al, "h": h}
                         for (o, i, al, h) in ep.convergence_rows]
            break
    if conv_rows:
        paths["convergence"] = os.path.join(out_dir, "convergence.csv")
        _write_csv(paths["convergence"], CONV_HEADER, conv_rows)

    if figures:
        paths.update(render_figures(episodes, agg_rows, conv_rows, out_dir))
    return paths


def render_figures(episodes, agg_rows, conv_rows, out_dir: str) -> dict:
    paths = {}

    if conv_rows:
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
        it = np.arange(1, len(conv_rows) + 1)
        ax1.plot(it, [r["al_value"] for r in conv_rows], marker=".")
        ax1.set_ylabel("augmented objective")
        ax2.semilogy(it, np.maximum([r["h"] for r in conv_rows], 1e-16),
                     marker=".", color="tab:red")
        ax2.set_ylabel("violation h")
        ax2.set_xlabel("cumulative inner iteration")
        fig.suptitle("solver convergence (first solve)")
        paths["fig_convergence"] = os.path.join(out_dir, "fig_convergence.png")
        fig.savefig(paths["fig_convergence"], dpi=130)
        plt.close(fig)

    by_policy: dict[str, EpisodeResult] = {}
    for ep in episodes:
        by_policy.setdefault(ep.policy, ep)
    if by_policy:
        fig, axes = plt.subplots(3, 1, figsize=(6.5, 7.5), sharex=True)
        for pol, ep in by_policy.items():
            t = [r.t for r in ep.records]
            axes[0].plot(t, [r.q.max() for r in ep.records], label=pol)
            axes[1].plot(t, [r.zc.max() for r in ep.records], label=pol)
            axes[2].plot(t, [mw_to_dbm(r.i_total) for r in ep.records],
                         label=pol)
        axes[0].set_ylabel("max Q (bit/Hz)")
        axes[1].set_ylabel("max Zc (bit/Hz)")
        axes[2].set_ylabel("I_w (dBm)")
        axes[2].set_xlabel("service period")
        axes[0].legend(fontsize=8)
        fig.suptitle("queue and interference traces (first seed)")
        paths["fig_queues"] = os.path.join(out_dir, "fig_queues.png")
        fig.savefig(paths["fig_queues"], dpi=130)
        plt.close(fig)

    # sweep comparison: one line per policy against the varying parameter
    sweep_var = None
    for var, getter in (("K", lambda r: r.n_users), ("V1", lambda r: r.v1),
                        ("V0", lambda r: r.v0)):
        if len({getter(r) for r in agg_rows}) > 1:
            sweep_var = (var, getter)
            break
    if sweep_var is not None:
        var, getter = sweep_var
        policies = sorted({r.policy for r in agg_rows})
        specs = [("mean_se", "spectral efficiency (bit/s/Hz)",
                  lambda r: r.mean_se, lambda r: r.ci_se),
                 ("mean_delay_ms", "mean delay (ms)",
                  lambda r: r.mean_delay_ms, None),
                 ("mean_Iw_dBm", "incumbent interference (dBm)",
                  lambda r: mw_to_dbm(r.mean_iw_mw), None)]
        for name, label, val, err in specs:
            fig, ax = plt.subplots(figsize=(6.0, 4.0))
            for pol in policies:
                rows = sorted((r for r in agg_rows if r.policy == pol),
                              key=getter)
                xs = [getter(r) for r in rows]
                ys = [val(r) for r in rows]
                if err is not None:
                    ax.errorbar(xs, ys, yerr=[err(r) for r in rows],
                                marker="o", capsize=3, label=pol)
                else:
                    ax.plot(xs, ys, marker="o", label=pol)
            if var in ("V0", "V1"):
                ax.set_xscale("log")
            ax.set_xlabel(var)
            ax.set_ylabel(label)
            ax.legend(fontsize=8)
            ax.grid(True, alpha=0.3)
            key = f"fig_sweep_{name}"
            paths[key] = os.path.join(out_dir, f"{key}.png")
            fig.savefig(paths[key], dpi=130)
            plt.close(fig)
    return paths
