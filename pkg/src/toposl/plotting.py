"""Figure helpers for scenario reports.

Figures go straight to files through the Agg canvas, so no display or
global pyplot state is involved.  PNG metadata is stripped of the
software tag to keep output byte-stable across runs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.4,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

WIDTH = 4.6
GOLDEN = (5 ** 0.5 - 1) / 2


def figure(width: float = WIDTH, aspect: float = GOLDEN) -> tuple[Figure, object]:
    fig = Figure(figsize=(width, width * aspect), dpi=150)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    return fig, ax


def save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def _styled(draw):
    import matplotlib

    def wrapped(*args, **kwargs):
        with matplotlib.rc_context(STYLE):
            return draw(*args, **kwargs)

    wrapped.__name__ = draw.__name__
    wrapped.__doc__ = draw.__doc__
    return wrapped


@_styled
def plot_crn_bounds(bounds: list[dict], path) -> Path:
    """Duration against the three lower bounds, with the diagonal for reference."""
    tau = np.array([b["tau"] for b in bounds])
    fig, ax = figure()
    ax.plot(tau, tau, color="0.6", ls="--", label=r"$\tau$")
    for key, label in (("tau1", r"$\tau_1$"), ("tau2", r"$\tau_2$"), ("tau3", r"$\tau_3$")):
        ax.plot(tau, [b[key] for b in bounds], marker="o", ms=3, label=label)
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("bound")
    ax.legend(loc="upper left")
    return save(fig, path)


@_styled
def plot_measures(times, values, names, path, ylabel: str = "mass") -> Path:
    """One line per vertex."""
    values = np.asarray(values).reshape(len(times), -1)
    fig, ax = figure()
    for k in range(values.shape[1]):
        ax.plot(times, values[:, k], label=names[k] if k < len(names) else None)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if values.shape[1] <= 10:
        ax.legend(loc="best", ncol=2)
    return save(fig, path)


@_styled
def plot_velocity(times, v, bound, path, bound_label: str = "bound") -> Path:
    """Instantaneous velocity and its pointwise upper bound."""
    fig, ax = figure()
    ax.plot(times, v, label=r"$\upsilon_t$")
    if bound is not None:
        ax.plot(times, bound, ls="--", label=bound_label)
    ax.set_xlabel("t")
    ax.set_ylabel("velocity")
    ax.legend(loc="best")
    return save(fig, path)
