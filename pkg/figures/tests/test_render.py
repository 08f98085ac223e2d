"""Figure jobs: registry, determinism, region contents, error handling."""
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ergolat_figures import (EmptyDataError, FigureJob, MissingColumnError,
                             RenderError, build_figure, render)
from ergolat_figures.render import main

DATA = Path(__file__).parent / "data"

JOB_INPUTS = {
    1: DATA / "gap_bounds.csv",
    2: DATA / "rate_mimo.csv",
    3: DATA / "siso_curves.csv",
    4: DATA / "siso_curves.csv",
    5: DATA / "mac_gap.csv",
    6: DATA / "mac_gap_snr.csv",
    7: DATA / "mac_region.csv",
}


@pytest.mark.parametrize("fig_id", sorted(JOB_INPUTS))
def test_every_figure_renders(fig_id, tmp_path):
    out = tmp_path / f"fig{fig_id}.png"
    path = render(FigureJob(fig_id, [JOB_INPUTS[fig_id]], out))
    assert path.exists() and path.stat().st_size > 2000


@pytest.mark.parametrize("fig_id", [1, 2, 7])
def test_rendering_is_deterministic(fig_id, tmp_path):
    outs = []
    for name in ("a.png", "b.png"):
        out = tmp_path / name
        render(FigureJob(fig_id, [JOB_INPUTS[fig_id]], out))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_region_plot_draws_corners_and_hull_segment():
    fig = build_figure(FigureJob(7, [JOB_INPUTS[7]], "unused.png"))
    ax = fig.axes[0]
    # corner-point scatter: one line in marker-only style holding both corners
    marker_lines = [ln for ln in ax.lines if ln.get_linestyle() == "None"]
    assert marker_lines and len(marker_lines[0].get_xdata()) == 2
    corners = np.column_stack([marker_lines[0].get_xdata(), marker_lines[0].get_ydata()])
    # boundary polyline passes through both corner points (the hull segment)
    boundary = max(ax.lines, key=lambda ln: len(ln.get_xdata()))
    pts = np.column_stack([boundary.get_xdata(), boundary.get_ydata()])
    for corner in corners:
        assert np.min(np.linalg.norm(pts - corner, axis=1)) < 1e-9
    # the two corners are consecutive boundary vertices
    idx = [int(np.argmin(np.linalg.norm(pts - c, axis=1))) for c in corners]
    assert abs(idx[0] - idx[1]) == 1


def test_unknown_figure_id_rejected():
    with pytest.raises(RenderError):
        FigureJob(8, [JOB_INPUTS[1]], "x.png")


def test_missing_column_fails_without_output(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("snr_db,rate_bits\n0,1.0\n")
    out = tmp_path / "fig.png"
    with pytest.raises(MissingColumnError):
        render(FigureJob(2, [bad], out))
    assert not out.exists()


def test_empty_csv_fails_without_output(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("n_r,bound_bits\n")
    out = tmp_path / "fig.png"
    with pytest.raises(EmptyDataError):
        render(FigureJob(1, [empty], out))
    assert not out.exists()


def test_cli_renders_and_reports_errors(tmp_path):
    out = tmp_path / "fig1.png"
    assert main(["1", "--csv", str(JOB_INPUTS[1]), "--out", str(out)]) == 0
    assert out.exists()
    bad = tmp_path / "bad.csv"
    bad.write_text("question,answer\nwhat,42\n")
    assert main(["1", "--csv", str(bad), "--out", str(tmp_path / "no.png")]) == 2
    assert not (tmp_path / "no.png").exists()


def test_module_entrypoint_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    proc = subprocess.run(
        [sys.executable, "-m", "ergolat_figures", "7", "--csv", str(bad),
         "--out", str(tmp_path / "x.png")],
        capture_output=True, text=True)
    assert proc.returncode == 2
    assert "lacks columns" in proc.stderr
    good = subprocess.run(
        [sys.executable, "-m", "ergolat_figures", "7", "--csv", str(JOB_INPUTS[7]),
         "--out", str(tmp_path / "fig7.png")],
        capture_output=True, text=True)
    assert good.returncode == 0
    assert (tmp_path / "fig7.png").exists()
