"""Matplotlib figures for the scenario outputs (PNG or SVG by file suffix)."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_training_curve(table, path) -> Path:
    """Normalised rolling reward per episode."""
    ep = np.asarray(table.column("episode"))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(ep, table.column("normalized_rolling_reward"), lw=1.5)
    ax.set_xlabel("episode")
    ax.set_ylabel("normalised rolling reward")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_fd_overlay(curves: Dict[str, object], path, title: Optional[str] = None) -> Path:
    """Flow-density scatter of every region plus group means, one colour per curve."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (label, curve) in enumerate(curves.items()):
        color = f"C{i}"
        pts = curve.points
        ax.scatter([p.k for p in pts], [p.q for p in pts], s=6, alpha=0.3, color=color)
        rows = curve.rows()
        ax.plot([r["mean_k"] for r in rows], [r["mean_q"] for r in rows], "-o", ms=3,
                color=color, label=label)
    ax.set_xlabel("density (veh/km)")
    ax.set_ylabel("flow (veh/h)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_fuel_comparison(table, path) -> Path:
    """Per-bin fuel efficiency (left) and share of time with a >= 0 (right)."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    names = sorted({r["controller"] for r in table.rows}, reverse=True)
    width = 8.0 / max(len(names), 1)
    for i, name in enumerate(names):
        rows = table.where(controller=name)
        mid = np.array([0.5 * (r["bin_lo"] + r["bin_hi"]) for r in rows])
        ax1.plot(mid, [r["km_per_liter"] for r in rows], "-o", ms=3, label=name)
        ax2.bar(mid - 4 + width * (i + 0.5), [r["positive_accel_fraction"] for r in rows],
                width=width, label=name)
    ax1.set_xlabel("speed bin (km/h)")
    ax1.set_ylabel("fuel efficiency (km/L)")
    ax2.set_xlabel("speed bin (km/h)")
    ax2.set_ylabel("time share with a >= 0")
    for ax in (ax1, ax2):
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_time_space(trajs: Sequence, path, regions: Sequence = (), stride: int = 1) -> Path:
    """Trajectories in the time-space plane, optionally with measurement regions."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for tr in trajs[::stride]:
        ax.plot(tr.t, tr.x, lw=0.5, color="0.3")
    for reg in regions:
        v = reg.vertices()
        ax.fill(v[:, 0], v[:, 1], alpha=0.3, color="C1", lw=0)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("position (m)")
    return _save(fig, path)
