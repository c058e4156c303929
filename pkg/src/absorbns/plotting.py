"""Figures for energy histories, rendered to files with the Agg backend."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .series import EnergySeries  # noqa: E402
from .theory import EnvelopeSpec, envelope_value  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.frameon": False,
}


def plot_energy(
    series: EnergySeries,
    path,
    envelope: Optional[EnvelopeSpec] = None,
    title: str = "",
    others: Optional[dict] = None,
    hline: Optional[tuple] = None,
) -> Path:
    """Energy on a log axis with an optional envelope overlay.

    ``others`` maps labels to extra series; ``hline`` is ``(value, label)``.
    """
    path = Path(path)
    t = series.column("t")
    e = series.column("energy")
    floor = 1e-16 * max(e[0], 1e-300)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(t, np.maximum(e, floor), lw=1.6, label="E(t)")
        for label, s in (others or {}).items():
            ax.semilogy(s.column("t"), np.maximum(s.column("energy"), floor), lw=1.2, ls="--", label=label)
        if envelope is not None:
            tt = np.linspace(max(envelope.t0, t[0]), t[-1], 400)
            ax.semilogy(tt, np.maximum(envelope_value(envelope, tt), floor), "k:", lw=1.4,
                        label=f"bound ({envelope.kind})")
        if hline is not None:
            ax.axhline(hline[0], color="0.4", lw=1.0, ls="-.", label=hline[1])
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_sweep(rows: list, x: str, y: str, path, title: str = "") -> Path:
    """Scatter of one numeric column of a sweep table against another."""
    path = Path(path)
    pts = [(r[x], r[y]) for r in rows if isinstance(r.get(x), (int, float)) and isinstance(r.get(y), (int, float))]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if pts:
            xs, ys = zip(*sorted(pts))
            ax.plot(xs, ys, "o-")
        ax.set_xlabel(x)
        ax.set_ylabel(y)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
