"""Figure construction: the drawn data must match the tables exactly."""

import numpy as np
import pytest

from mqplots.csvio import SchemaError, read_validated
from mqplots.figures import FigureSpec, build_figure


def spec_for(kind, source, **kw):
    return FigureSpec(kind=kind, source=str(source), out="unused.svg", **kw)


def test_figure_spec_rejects_unknown_kind():
    with pytest.raises(SchemaError):
        FigureSpec(kind="pie", source="a.csv", out="a.svg")


def test_c_sweep_draws_both_columns(sweep_csv):
    fig = build_figure(spec_for("c-sweep", sweep_csv))
    table = read_validated(sweep_csv, "c-sweep")
    lines = fig.axes[0].lines
    assert len(lines) == 2
    curve, asymptote = lines
    assert list(curve.get_xdata()) == table.floats("c")
    assert list(curve.get_ydata()) == table.floats("integral_f_c")
    assert list(asymptote.get_ydata()) == table.floats("inv_c_minus_1")
    assert asymptote.get_linestyle() == "--"


def test_gap_hist_selects_coordinate(chain_hist_csv):
    fig = build_figure(spec_for("gap-hist", chain_hist_csv, coordinate="gap1"))
    ax = fig.axes[0]
    assert ax.get_xlabel() == "gap1"
    assert len(ax.patches) > 0  # observed bars
    assert len(ax.lines) == 1  # exact-law overlay
    table = read_validated(chain_hist_csv, "gap-hist")
    keep = [i for i, c in enumerate(table.strings("coordinate")) if c == "gap1"]
    expected = [table.floats("expected_count")[i] for i in keep]
    assert list(ax.lines[0].get_ydata()) == expected


def test_gap_hist_unknown_coordinate_lists_available(chain_hist_csv):
    with pytest.raises(SchemaError) as err:
        build_figure(spec_for("gap-hist", chain_hist_csv, coordinate="gap9"))
    assert "rank_error" in str(err.value)
    assert "gap3" in str(err.value)


def test_logistic_points_pass_through(logistic_csv):
    fig = build_figure(spec_for("logistic", logistic_csv))
    table = read_validated(logistic_csv, "logistic")
    ax = fig.axes[0]
    labels = [ln.get_label() for ln in ax.lines]
    emp = ax.lines[labels.index("empirical")]
    assert list(emp.get_xdata()) == table.floats("empirical")
    assert list(emp.get_ydata()) == table.floats("x")


def test_logistic_overlay_is_the_sigmoid(tmp_path):
    # The reference curve is the one computed line; pin its formula.
    path = tmp_path / "tiny.csv"
    path.write_text("x,empirical,finite_n,limit\n0.5,0.0,0.0,0.0\n0.9,2.2,2.197,2.197\n")
    fig = build_figure(spec_for("logistic", path))
    ref = fig.axes[0].lines[0]
    ts = np.asarray(ref.get_xdata())
    ys = np.asarray(ref.get_ydata())
    assert np.allclose(ys, np.exp(ts) / (np.exp(ts) + 1.0), atol=1e-12)


def test_convergence_draws_profiles_and_references(replay_csv):
    fig = build_figure(spec_for("convergence", replay_csv))
    ax = fig.axes[0]
    labels = [ln.get_label() for ln in ax.lines]
    assert "expected at s = 0" in labels
    assert "expected long-run" in labels
    checkpoint_lines = [l for l in labels if l.startswith("s = ")]
    assert len(checkpoint_lines) >= 3
    assert "s = 0" in checkpoint_lines


def test_title_override(sweep_csv):
    fig = build_figure(spec_for("c-sweep", sweep_csv, title="custom"))
    assert fig.axes[0].get_title() == "custom"
