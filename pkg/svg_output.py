"""SVG plots of regret curves and objective landscapes."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from errors import OutputError


# Fixed salt and no date stamp: identical data gives byte-identical SVG.
plt.rcParams["svg.hashsalt"] = "wdrbo"
SVG_METADATA = {"Date": None}

COLORS = {
    "wdrbo": "#d62728",
    "erbo": "#1f77b4",
    "gpucb": "#2ca02c",
    "stableopt": "#9467bd",
}


def _save(fig, path: Path) -> None:
    try:
        fig.savefig(path, format="svg", metadata=SVG_METADATA, bbox_inches="tight")
    except OSError as e:
        raise OutputError(f"cannot write plot {path}: {e}") from e
    finally:
        plt.close(fig)


def save_regret_svg(
    series: dict[str, tuple[np.ndarray, np.ndarray]],
    path: str | Path,
    ylabel: str = "Cumulative expected regret",
    title: str = "",
) -> None:
    """One line per algorithm with a mean ± standard error band.

    `series` maps an algorithm label to (mean, stderr) arrays indexed by t − 1.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (mean, stderr) in series.items():
        t = np.arange(1, len(mean) + 1)
        color = COLORS.get(label)
        ax.plot(t, mean, label=label, color=color, linewidth=1.5)
        ax.fill_between(t, mean - stderr, mean + stderr, color=color, alpha=0.2, linewidth=0)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc="upper left")
    _save(fig, Path(path))


def save_landscape_svg(
    x: np.ndarray,
    curves: dict[str, np.ndarray],
    optima: dict[str, tuple[float, float]],
    path: str | Path,
    title: str = "",
) -> None:
    """Objective slices over a 1-D decision box with their maximizers marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in curves.items():
        line = ax.plot(x, values, label=label, linewidth=1.5)[0]
        if label in optima:
            x_best, value_best = optima[label]
            ax.plot([x_best], [value_best], marker="o", color=line.get_color())
            ax.axvline(x_best, color=line.get_color(), linestyle=":", linewidth=1)
    ax.set_xlabel("x")
    ax.set_ylabel("f")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower center")
    _save(fig, Path(path))
