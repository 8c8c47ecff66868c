"""Output side of the CLI: delimited tables, JSON summaries, figures.

Every file carries the config hash and seed so a run can be reproduced
bit-for-bit from its outputs.  Tables are written as CSV (with `#`
metadata header lines) or JSON depending on the requested format;
figures are rendered to PNG next to the data files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .capacity import ActivationVector, InnerRegion, boundary_probe  # noqa: E402
from .sim import RunMetrics  # noqa: E402


def write_table(
    path: Path,
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
    fmt: str,
    meta: Dict[str, Any],
) -> Path:
    """Write one table as CSV (with # meta lines) or JSON; returns the path."""
    path = path.with_suffix(".csv" if fmt == "csv" else ".json")
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            for key in sorted(meta):
                fh.write(f"# {key}={meta[key]}\n")
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    else:
        payload = dict(meta)
        payload["rows"] = [dict(zip(header, row)) for row in rows]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=float)
            fh.write("\n")
    return path


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
        fh.write("\n")
    return path


def region_rows(region: InnerRegion) -> List[List[Any]]:
    """One row per subset vertex: bitmask, active count, rate coordinates."""
    rows = []
    for mask, vertex in zip(region.masks, region.vertices):
        phi = ActivationVector(mask=mask, n=region.n)
        rows.append([mask, phi.m] + [float(v) for v in vertex])
    return rows


def region_header(n: int) -> List[str]:
    return ["mask", "m"] + [f"eta_{i}" for i in range(n)]


def boundary_rows(region: InnerRegion, rays: int) -> List[List[Any]]:
    """Boundary points along a fan of directions (two-channel regions)."""
    if region.n != 2:
        raise ValueError("the boundary fan is only defined for two channels")
    rows = []
    for k in range(rays):
        theta = 0.5 * np.pi * k / (rays - 1)
        v = np.array([np.cos(theta), np.sin(theta)])
        v[np.abs(v) < 1e-15] = 0.0
        point = boundary_probe(region, v)
        rows.append([float(theta), float(point[0]), float(point[1])])
    return rows


def frame_rows(metrics: RunMetrics) -> List[List[Any]]:
    frames = metrics.frames
    if frames is None:
        raise ValueError("run was not configured to record frames")
    rows = []
    for t, length, mask, r, q in zip(
        frames.t, frames.length, frames.mask, frames.r, frames.q
    ):
        rows.append(
            [t, length, mask]
            + [float(v) for v in r]
            + [float(v) for v in q]
        )
    return rows


def frame_header(n: int) -> List[str]:
    return (
        ["t", "length", "mask"]
        + [f"r_{i}" for i in range(n)]
        + [f"q_{i}" for i in range(n)]
    )


def run_summary(
    metrics: RunMetrics,
    slope: Optional[float],
    stable: Optional[bool],
    b: float,
    v_g: Optional[float],
    meta: Dict[str, Any],
) -> Dict[str, Any]:
    summary = dict(meta)
    summary.update(
        {
            "horizon": metrics.horizon,
            "t_end": metrics.t_end,
            "warmup_t": metrics.warmup_t,
            "frame_count": metrics.frame_count,
            "rbar": [float(v) for v in metrics.rbar],
            "ybar": [float(v) for v in metrics.ybar],
            "utility_of_ybar": metrics.utility_of_ybar,
            "mean_backlog": metrics.mean_backlog,
            "final_q": [float(v) for v in metrics.final_q],
            "backlog_slope": slope,
            "stable": stable,
            "b_constant": b,
            "v_g": v_g,
            "b_over_v_g": (b / v_g if v_g else None),
        }
    )
    return summary


# ---------------------------------------------------------------------------
# figures


def plot_region(
    region: InnerRegion,
    boundary: Sequence[Sequence[float]],
    path: Path,
) -> Path:
    """Vertex scatter plus the traced boundary for a two-channel region."""
    fig, ax = plt.subplots(figsize=(5, 5))
    pts = np.array([[row[1], row[2]] for row in boundary])
    ax.plot(pts[:, 0], pts[:, 1], "-", lw=1.5, label="region boundary")
    ax.fill(
        np.concatenate([[0.0], pts[:, 0], [0.0]]),
        np.concatenate([[0.0], pts[:, 1], [0.0]]),
        alpha=0.15,
    )
    ax.plot(
        region.vertices[:, 0],
        region.vertices[:, 1],
        "o",
        ms=6,
        label="subset vertices",
    )
    ax.set_xlabel("throughput, channel 0")
    ax.set_ylabel("throughput, channel 1")
    ax.set_title("Achievable throughput region")
    ax.legend(loc="upper right")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(rows: Sequence[Sequence[Any]], g_star: float, path: Path) -> Path:
    """Achieved utility vs the shrinking lower bound across the V_g sweep.

    Rows are (v_g, seed, g_ybar, bound, mean_backlog).
    """
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    vgs = sorted({row[0] for row in rows})
    for seed in sorted({row[1] for row in rows}):
        xs = [row[0] for row in rows if row[1] == seed]
        ys = [row[2] for row in rows if row[1] == seed]
        ax1.plot(xs, ys, "o-", alpha=0.7, label=f"seed {seed}")
    ax1.plot(
        vgs,
        [next(row[3] for row in rows if row[0] == v) for v in vgs],
        "k--",
        label="lower bound",
    )
    ax1.axhline(g_star, color="gray", lw=1, label="offline optimum")
    ax1.set_xscale("log")
    ax1.set_xlabel("V_g")
    ax1.set_ylabel("utility of average throughput")
    ax1.legend(fontsize=8)
    for seed in sorted({row[1] for row in rows}):
        xs = [row[0] for row in rows if row[1] == seed]
        bs = [row[4] for row in rows if row[1] == seed]
        ax2.plot(xs, bs, "o-", alpha=0.7)
    ax2.set_xscale("log")
    ax2.set_xlabel("V_g")
    ax2.set_ylabel("mean total backlog (packets)")
    fig.suptitle("Utility / backlog tradeoff across V_g")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_backlog(metrics: RunMetrics, path: Path, stride: int = 0) -> Path:
    """Total backlog trajectory of one run (down-sampled for large horizons)."""
    backlog = metrics.backlog
    if stride <= 0:
        stride = max(1, len(backlog) // 20_000)
    ts = np.arange(0, len(backlog), stride)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ts, backlog[::stride], lw=0.8)
    if 0 < metrics.warmup_t < len(backlog):
        ax.axvline(metrics.warmup_t, color="gray", ls="--", lw=1, label="warmup")
        ax.legend()
    ax.set_xlabel("slot")
    ax.set_ylabel("total backlog (packets)")
    ax.set_title("Backlog trajectory")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
