"""Report figures, rendered off-screen to PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .verify import SchemeReport  # noqa: E402


def _available(rep: SchemeReport):
    return [r for r in rep.rows if r.available]


def plot_expansion(rep: SchemeReport, path: str | Path) -> Path:
    """Measured vs published pixel expansion and shares held per scheme."""
    rows = _available(rep)
    names = [r.scheme for r in rows]
    x = np.arange(len(rows))
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, key, title in ((axes[0], "pixel_expansion", "Pixel expansion"),
                           (axes[1], "shares_held", "Shares held")):
        ax.bar(x - 0.2, [getattr(r, key) for r in rows], 0.4, label="measured")
        ax.bar(x + 0.2, [r.published[key] for r in rows], 0.4, label="published", alpha=0.7)
        ax.set_xticks(x, names)
        ax.set_title(title)
    axes[0].legend()
    fig.suptitle(f"(k, n, g) = ({rep.k}, {rep.n}, {rep.g})")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_level_weights(weights: dict[str, list[float]], g: int, path: str | Path) -> Path:
    """Reconstructed darkness (weight / block length) against grey level."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, ws in weights.items():
        ax.plot(range(g), ws, marker="o", label=name)
    ax.set_xlabel("grey level")
    ax.set_ylabel("black fraction")
    ax.set_xticks(range(g))
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
