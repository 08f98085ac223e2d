"""Render ergolat CSV outputs into the seven standard figures.

Figure ids:
  1  point-to-point gap guarantee vs number of receive antennas
  2  2x2 MIMO rate vs capacity, with the gap on a second panel
  3  SISO curves, Nakagami fading (rate/capacity + gap/bound)
  4  SISO curves, Rayleigh fading (same layout)
  5  MAC sum-rate gap bound vs number of receive antennas
  6  two-user MAC sum rate vs sum capacity over SNR
  7  two-user rate region polygon with corner points and hull segment

Rendering is deterministic: Agg backend, fixed figure geometry and fonts,
pinned PNG metadata, no timestamps.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.3,
})

PNG_METADATA = {"Software": "ergolat-figures"}


class RenderError(ValueError):
    pass


class MissingColumnError(RenderError):
    pass


class EmptyDataError(RenderError):
    pass


@dataclass
class FigureJob:
    figure_id: int
    csv_paths: list
    out_path: Path
    title: str = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure_id not in LAYOUTS:
            raise RenderError(f"figure id {self.figure_id} has no registered layout")
        self.csv_paths = [Path(p) for p in self.csv_paths]
        self.out_path = Path(self.out_path)


def read_table(path: Path, required):
    """CSV -> dict of float arrays; blank fields become NaN."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise EmptyDataError(f"{path} has no data rows")
    missing = [c for c in required if c not in rows[0]]
    if missing:
        raise MissingColumnError(f"{path} lacks columns {missing}")
    table = {}
    for col in rows[0]:
        vals = []
        for row in rows:
            raw = row[col]
            try:
                vals.append(float(raw))
            except (TypeError, ValueError):
                vals.append(np.nan)
        table[col] = np.asarray(vals)
    return table


def _fig_gap_vs_nr(job):
    t = read_table(job.csv_paths[0], ["n_r", "bound_bits"])
    fig, ax = plt.subplots()
    order = np.argsort(t["n_r"])
    ax.plot(t["n_r"][order], t["bound_bits"][order], "o-", label="gap guarantee")
    if "gap_bits" in t and np.isfinite(t["gap_bits"]).any():
        ax.plot(t["n_r"][order], t["gap_bits"][order], "s--", label="measured gap")
    ax.set_xlabel("receive antennas $N_r$")
    ax.set_ylabel("gap to capacity (bits)")
    ax.set_title(job.title or "Gap-to-capacity guarantee vs $N_r$")
    ax.legend()
    return fig


def _fig_mimo_rates(job):
    t = read_table(job.csv_paths[0], ["snr_db", "rate_bits", "capacity_bits", "gap_bits"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.6))
    order = np.argsort(t["snr_db"])
    ax1.plot(t["snr_db"][order], t["capacity_bits"][order], "k-", label="ergodic capacity")
    ax1.plot(t["snr_db"][order], t["rate_bits"][order], "o-", label="lattice scheme")
    ax1.set_xlabel("SNR (dB)")
    ax1.set_ylabel("bits / channel use")
    ax1.legend()
    ax2.plot(t["snr_db"][order], t["gap_bits"][order], "s-", color="tab:red")
    ax2.set_xlabel("SNR (dB)")
    ax2.set_ylabel("gap (bits)")
    fig.suptitle(job.title or "MIMO rate vs ergodic capacity")
    fig.tight_layout()
    return fig


def _fig_siso_curves(title_default):
    def build(job):
        t = read_table(job.csv_paths[0],
                       ["snr_db", "rate_bits", "capacity_bits", "gap_bits", "bound_bits"])
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.6))
        order = np.argsort(t["snr_db"])
        ax1.plot(t["snr_db"][order], t["capacity_bits"][order], "k-", label="capacity")
        ax1.plot(t["snr_db"][order], t["rate_bits"][order], "o-", label="lattice scheme")
        ax1.set_xlabel("SNR (dB)")
        ax1.set_ylabel("bits / channel use")
        ax1.legend()
        ax2.plot(t["snr_db"][order], t["gap_bits"][order], "s-", label="gap")
        mask = np.isfinite(t["bound_bits"])
        ax2.plot(t["snr_db"][order][mask[order]], t["bound_bits"][order][mask[order]],
                 "^--", label="bound")
        ax2.set_xlabel("SNR (dB)")
        ax2.set_ylabel("bits")
        ax2.legend()
        fig.suptitle(job.title or title_default)
        fig.tight_layout()
        return fig
    return build


def _fig_mac_gap_vs_nr(job):
    t = read_table(job.csv_paths[0], ["n_r", "bound_bits"])
    fig, ax = plt.subplots()
    order = np.argsort(t["n_r"])
    ax.plot(t["n_r"][order], t["bound_bits"][order], "o-", label="sum-rate gap bound")
    if "gap_bits" in t and np.isfinite(t["gap_bits"]).any():
        ax.plot(t["n_r"][order], t["gap_bits"][order], "s--", label="measured gap")
    ax.set_xlabel("receive antennas $N_r$")
    ax.set_ylabel("gap to sum capacity (bits)")
    ax.set_title(job.title or "MAC gap-to-sum-capacity bound vs $N_r$")
    ax.legend()
    return fig


def _fig_mac_sum_rate(job):
    t = read_table(job.csv_paths[0], ["snr_db", "sum_rate_bits", "sum_capacity_bits"])
    fig, ax = plt.subplots()
    order = np.argsort(t["snr_db"])
    ax.plot(t["snr_db"][order], t["sum_capacity_bits"][order], "k-", label="sum capacity")
    ax.plot(t["snr_db"][order], t["sum_rate_bits"][order], "o-", label="lattice scheme")
    ax.set_xlabel("SNR per user (dB)")
    ax.set_ylabel("sum rate (bits / channel use)")
    ax.set_title(job.title or "Two-user MAC sum rate")
    ax.legend()
    return fig


def _fig_mac_region(job):
    t = read_table(job.csv_paths[0],
                   ["R_1_bits", "R_2_bits", "gamma1", "gamma2", "gamma3", "gamma4"])
    g1, g2 = t["gamma1"][0], t["gamma2"][0]
    corners = sorted(zip(t["R_1_bits"], t["R_2_bits"]))  # ascending R_1
    fig, ax = plt.subplots(figsize=(4.4, 4.2))
    # region boundary: R_2 cap, hull segment between corners, R_1 cap
    (x_lo, y_lo), (x_hi, y_hi) = corners[0], corners[-1]
    boundary = np.array([(0.0, -g2), (x_lo, y_lo), (x_hi, y_hi), (-g1, 0.0)])
    ax.plot(boundary[:, 0], boundary[:, 1], "-", color="tab:blue", label="lattice region")
    ax.fill(np.concatenate([[0.0], boundary[:, 0], [0.0]]),
            np.concatenate([[0.0], boundary[:, 1], [0.0]]),
            color="tab:blue", alpha=0.12)
    ax.plot(t["R_1_bits"], t["R_2_bits"], "o", color="tab:red", zorder=5,
            label="corner points")
    if "sum_capacity_bits" in t and np.isfinite(t["sum_capacity_bits"][0]):
        cs = t["sum_capacity_bits"][0]
        xs = np.array([0.0, cs])
        ax.plot(xs, cs - xs, "k--", label="sum capacity")
    ax.set_xlabel("$R_1$ (bits)")
    ax.set_ylabel("$R_2$ (bits)")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    ax.set_title(job.title or "Two-user MAC rate region")
    ax.legend(loc="upper right")
    return fig


LAYOUTS = {
    1: _fig_gap_vs_nr,
    2: _fig_mimo_rates,
    3: _fig_siso_curves("SISO rates, Nakagami fading"),
    4: _fig_siso_curves("SISO rates, Rayleigh fading"),
    5: _fig_mac_gap_vs_nr,
    6: _fig_mac_sum_rate,
    7: _fig_mac_region,
}


def build_figure(job: FigureJob):
    """Construct the matplotlib Figure for a job (no file output)."""
    return LAYOUTS[job.figure_id](job)


def render(job: FigureJob) -> Path:
    """Render a job to its output file; nothing is written on error."""
    fig = build_figure(job)
    try:
        job.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(job.out_path, metadata=PNG_METADATA)
    finally:
        plt.close(fig)
    return job.out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ergolat-figures",
        description="Render ergolat CSV outputs into figure files.")
    parser.add_argument("figure_id", type=int, help="figure id, 1..7")
    parser.add_argument("--csv", action="append", required=True,
                        help="input CSV path (repeatable)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        job = FigureJob(figure_id=args.figure_id, csv_paths=args.csv,
                        out_path=args.out, title=args.title)
        path = render(job)
    except (RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
