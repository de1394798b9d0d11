"""Optional figures from CSV outputs (needs matplotlib; used only with ``--figures``)."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _load(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def figures_for(folder: str | Path) -> list[Path]:
    """Render one PNG per diagnostic series plus one with the saved fields."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    folder = Path(folder)
    out_dir = folder / "figures"
    out_dir.mkdir(exist_ok=True)
    written = []
    for csv in sorted(folder.glob("diag_*.csv")):
        t, v = _load(csv)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if np.all(t > 0) and np.all(v > 0):
            ax.loglog(t, v, "o-", ms=3)
        else:
            ax.plot(t, v, "o-", ms=3)
        ax.set_xlabel("time")
        ax.set_title(csv.stem[5:])
        fig.tight_layout()
        path = out_dir / f"{csv.stem}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    fields = sorted(folder.glob("field_*.csv"))
    if fields:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        picks = fields if len(fields) <= 6 else [fields[i] for i in np.linspace(0, len(fields) - 1, 6).astype(int)]
        for csv in picks:
            x, u = _load(csv)
            ax.plot(x, u, lw=1, label=csv.stem)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_dir / "fields.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
