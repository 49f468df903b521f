"""Figure rendering for the report path.

Renders the summary of a sweep as PNG files next to the delimited output:
mean training length vs N_t (with the closed-form reference dashed where it
exists) and the outage rate vs N_t on a log scale.  Uses Figure objects
directly so no interactive backend is ever touched.
"""

from __future__ import annotations

import os
from collections import defaultdict

from matplotlib.figure import Figure

from .channel import FixedPaths, ScaledPaths
from .harness import ExperimentSpec, ExperimentSummary

__all__ = ["render_report_figures"]


def _path_label(paths) -> str:
    if isinstance(paths, FixedPaths):
        return f"L={paths.count}"
    if isinstance(paths, ScaledPaths):
        return f"L={paths.fraction:g}N"
    return str(paths)


def _series(spec: ExperimentSpec, summary: ExperimentSummary):
    """Group sweep points into (label, rows) series with N_t on the x axis."""
    points = spec.points()
    rows = summary.points
    groups = defaultdict(list)
    for pt, row in zip(points, rows):
        extras = []
        if len(spec.paths) > 1:
            extras.append(_path_label(pt.paths))
        if len(spec.n_rf) > 1:
            extras.append(f"N_RF={pt.n_rf}")
        if len(spec.n_users) > 1:
            extras.append(f"U={pt.n_users}")
        if (spec.alpha and len(spec.alpha) > 1) or (spec.rate and len(spec.rate) > 1):
            extras.append(f"a={pt.alpha:g}")
        key = (_path_label(pt.paths), pt.n_rf, pt.n_users, pt.alpha,
               pt.l_trained, ", ".join(extras))
        groups[key].append((pt.n_t, row))
    out = []
    for key, pairs in groups.items():
        label = key[-1] or f"{spec.scheme}"
        pairs.sort(key=lambda p: p[0])
        out.append((label, pairs))
    return out


def render_report_figures(spec, summary, outdir, stem="report") -> list[str]:
    """Write the figures for one summary; returns the file paths."""
    os.makedirs(outdir, exist_ok=True)
    series = _series(spec, summary)
    written = []

    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.subplots()
    for label, pairs in series:
        x = [p[0] for p in pairs]
        y = [p[1].mean_len for p in pairs]
        err = [3 * p[1].se_len for p in pairs]
        ax.errorbar(x, y, yerr=err, marker="o", capsize=2, label=label)
        ana = [p[1].analytic_len for p in pairs]
        if all(a is not None for a in ana):
            ax.plot(x, ana, "k--", linewidth=0.9)
    ax.set_xlabel("$N_t$")
    ax.set_ylabel("mean training length")
    ax.set_title(f"{spec.mode}/{spec.scheme}" + (f" ({spec.method})" if spec.method else ""))
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    path = os.path.join(outdir, f"{stem}_training_length.png")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    written.append(path)

    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.subplots()
    drew = False
    for label, pairs in series:
        x = [p[0] for p in pairs]
        y = [p[1].outage for p in pairs]
        if not any(v > 0 for v in y):
            continue
        drew = True
        ax.semilogy(x, y, marker="o", label=label)
        ana = [p[1].analytic_outage for p in pairs]
        if all(a is not None for a in ana):
            ax.semilogy(x, ana, "k--", linewidth=0.9)
    if drew:
        ax.set_xlabel("$N_t$")
        ax.set_ylabel("outage probability")
        ax.set_title(f"{spec.mode}/{spec.scheme}" + (f" ({spec.method})" if spec.method else ""))
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        path = os.path.join(outdir, f"{stem}_outage.png")
        fig.savefig(path, dpi=150, bbox_inches="tight")
        written.append(path)
    return written
