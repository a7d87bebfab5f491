"""Figure builders: pure table -> matplotlib Figure, one per kind.

Every plotted data point passes through from the input table.  The only
lines drawn from a formula are the mandated reference curves: the logistic
overlay e^t / (e^t + 1) needs a dense grid the CSV does not carry.  The
c-sweep asymptote and the convergence reference profiles come straight from
their CSV columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.figure import Figure

from .csvio import SchemaError, Table, read_validated

KINDS = ("c-sweep", "convergence", "logistic", "gap-hist")


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: what to read, what to draw, where to write."""

    kind: str
    source: str
    out: str
    coordinate: str = "rank_error"  # gap-hist only
    title: str | None = None
    dpi: int = 150

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")


def _figure() -> tuple[Figure, plt.Axes]:
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.add_subplot()
    ax.grid(True, alpha=0.3)
    return fig, ax


def _c_sweep(table: Table, spec: FigureSpec) -> Figure:
    fig, ax = _figure()
    c = table.floats("c")
    ax.plot(c, table.floats("integral_f_c"), "-", color="C0",
            label="expected rank error / n", zorder=3)
    ax.plot(c, table.floats("inv_c_minus_1"), "--", color="C3",
            label="asymptote 1/(c-1)")
    ax.set_xlabel("choice parameter c")
    ax.set_ylabel("expected rank error per queue")
    ax.set_title(spec.title or "Rank error per queue vs choice parameter")
    ax.legend()
    return fig


def _convergence(table: Table, spec: FigureSpec) -> Figure:
    fig, ax = _figure()
    steps = sorted({int(float(s)) for s in table.strings("step")})
    step_col = [int(float(s)) for s in table.strings("step")]
    i_col = table.floats("i")
    observed = table.floats("observed_rank")
    cmap = plt.get_cmap("viridis")
    denom = max(len(steps) - 1, 1)
    for rank, s in enumerate(steps):
        xs = [i for i, at in zip(i_col, step_col) if at == s]
        ys = [y for y, at in zip(observed, step_col) if at == s]
        order = np.argsort(xs)
        ax.plot(np.array(xs)[order], np.array(ys)[order], "o-", ms=3, lw=1,
                color=cmap(rank / denom), alpha=0.8, label=f"s = {s}")
    # Reference profiles ride along in every row; any one step carries them.
    first = steps[0]
    xs = [i for i, at in zip(i_col, step_col) if at == first]
    init = [y for y, at in zip(table.floats("expected_initial_rank"), step_col) if at == first]
    final = [y for y, at in zip(table.floats("expected_rank"), step_col) if at == first]
    order = np.argsort(xs)
    ax.plot(np.array(xs)[order], np.array(init)[order], ":", color="0.3", lw=2,
            label="expected at s = 0")
    ax.plot(np.array(xs)[order], np.array(final)[order], "-", color="black", lw=2,
            label="expected long-run")
    ax.set_xlabel("queue head (sorted position i)")
    ax.set_ylabel("rank among live elements")
    ax.set_title(spec.title or "Head-rank profile convergence")
    ax.legend(fontsize=7, ncols=2)
    return fig


def _logistic(table: Table, spec: FigureSpec) -> Figure:
    fig, ax = _figure()
    xs = table.floats("x")
    emp = table.floats("empirical")
    fin = table.floats("finite_n")
    lim = table.floats("limit")
    ts = [t for t in emp + fin + lim if math.isfinite(t)]
    lo, hi = min(ts) - 0.5, max(ts) + 0.5
    grid = np.linspace(lo, hi, 400)
    ax.plot(grid, np.exp(grid) / (np.exp(grid) + 1.0), "-", color="0.4",
            label="e^t / (e^t + 1)")
    ax.plot(emp, xs, "o", color="C0", label="empirical")
    ax.plot(fin, xs, "x", color="C3", ms=7, label="finite-n analytic")
    ax.set_xlabel("centered time t")
    ax.set_ylabel("fraction of tokens below")
    ax.set_title(spec.title or "Long-run token position profile")
    ax.legend()
    return fig


def _gap_hist(table: Table, spec: FigureSpec) -> Figure:
    coord_col = table.strings("coordinate")
    keep = [i for i, c in enumerate(coord_col) if c == spec.coordinate]
    if not keep:
        available = ", ".join(sorted(set(coord_col)))
        raise SchemaError(
            f"coordinate {spec.coordinate!r} not in the table (available: {available})"
        )
    values = np.array(table.floats("value"))[keep]
    counts = np.array(table.floats("count"))[keep]
    expected = np.array(table.floats("expected_count"))[keep]
    fig, ax = _figure()
    ax.bar(values, counts, width=0.9, color="C0", alpha=0.6, label="observed")
    ax.plot(values, expected, "o-", color="C3", ms=3, lw=1.2, label="exact law")
    ax.set_xlabel(spec.coordinate)
    ax.set_ylabel("count")
    ax.set_yscale("log")
    ax.set_title(spec.title or f"{spec.coordinate}: observed vs exact stationary law")
    ax.legend()
    return fig


_BUILDERS = {
    "c-sweep": _c_sweep,
    "convergence": _convergence,
    "logistic": _logistic,
    "gap-hist": _gap_hist,
}


def build_figure(spec: FigureSpec) -> Figure:
    """Read, validate, and draw; no files are written."""
    table = read_validated(spec.source, spec.kind)
    return _BUILDERS[spec.kind](table, spec)


def save_figure(fig: Figure, spec: FigureSpec) -> None:
    """Write the image with all embedded timestamps suppressed."""
    out = spec.out
    if out.endswith(".svg"):
        # Fixed hash salt keeps glyph ids stable; Date: None drops the stamp.
        with matplotlib.rc_context({"svg.hashsalt": "mqplots"}):
            fig.savefig(out, format="svg", metadata={"Date": None})
    elif out.endswith(".png"):
        fig.savefig(out, format="png", dpi=spec.dpi, metadata={"Software": None})
    elif out.endswith(".pdf"):
        fig.savefig(
            out,
            format="pdf",
            metadata={"CreationDate": None, "ModDate": None, "Producer": None, "Creator": None},
        )
    else:
        raise SchemaError(f"unsupported image format: {out} (use .svg, .png, or .pdf)")


def render(spec: FigureSpec) -> None:
    save_figure(build_figure(spec), spec)
