"""Static SVG figures from CSV output.

Figures are byte-deterministic: the Agg backend is forced, SVG element ids
use a fixed hash salt and the date metadata is dropped.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import ConfigurationError  # noqa: E402
from .io import read_table  # noqa: E402

_RC = {"svg.hashsalt": "qhlab", "svg.fonttype": "path", "font.size": 9,
       "axes.grid": True, "grid.alpha": 0.3}


@dataclass
class PlotSpec:
    """Columns and labels for one figure; one panel per input CSV."""

    x: str
    ys: list
    xlabel: str = ""
    ylabel: str = ""
    titles: list = field(default_factory=list)
    loglog: bool = False
    logy: bool = False
    markers: bool = False


def _columns(path, names):
    try:
        table = read_table(path)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    missing = [c for c in names if c not in table]
    if missing:
        raise ConfigurationError(f"{path}: missing column(s) {', '.join(missing)}")
    if not table[names[0]]:
        raise ConfigurationError(f"{path}: no data rows")
    return {c: np.array(table[c], dtype=float) for c in names}


def emit_plot(csv_paths, spec, out_path):
    """Render ``spec`` from one CSV per panel into ``out_path`` (SVG)."""
    if isinstance(csv_paths, (str, Path)):
        csv_paths = [csv_paths]
    data = [_columns(p, [spec.x, *spec.ys]) for p in csv_paths]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(data), figsize=(4.2 * len(data), 3.2),
                                 squeeze=False, sharey=True)
        for i, (ax, cols) in enumerate(zip(axes[0], data)):
            for y in spec.ys:
                kw = {"marker": "o", "ms": 3} if spec.markers else {}
                ax.plot(cols[spec.x], cols[y], lw=1.0, label=y, **kw)
            if spec.loglog:
                ax.set_xscale("log")
                ax.set_yscale("log")
            elif spec.logy:
                ax.set_yscale("log")
            ax.set_xlabel(spec.xlabel or spec.x)
            if i == 0:
                ax.set_ylabel(spec.ylabel or ", ".join(spec.ys))
            if i < len(spec.titles):
                ax.set_title(spec.titles[i])
            if len(spec.ys) > 1:
                ax.legend(frameon=False)
        fig.tight_layout()
        out_path = Path(out_path)
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out_path
