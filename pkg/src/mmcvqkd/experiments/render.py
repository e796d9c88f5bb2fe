"""Static SVG line charts of sweep results.

Output is byte-stable: the SVG id salt is fixed and no date is embedded.
"""

from __future__ import annotations

import math
from os import PathLike

import matplotlib
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from ..errors import ConfigError
from .sweeps import SweepResult, iter_series

__all__ = ["render_chart", "DEFAULT_CHARTS"]

#: Default axis/series selection per sweep kind.
DEFAULT_CHARTS = {
    "fig1": dict(x="repetition_rate", y="v_ele_snu", series="family", logx=True, logy=True),
    "fig3": dict(x="m", y="R_SNR", series="v_ele"),
    "fig5": dict(x="distance_km", y="gain", series=("v_ele", "m")),
    "mc-check": dict(x="N", y="empirical_K", series="m", logx=True),
}


def render_chart(
    result: SweepResult,
    path: str | PathLike[str],
    x: str,
    y: str,
    series: str | tuple[str, ...] | None = None,
    *,
    logx: bool = False,
    logy: bool = False,
    title: str | None = None,
) -> None:
    """Write a line chart of ``y`` against ``x`` with one line per ``series`` value.

    ``series`` may name several columns; their values are combined into one
    legend label. Non-finite y values (e.g. undefined gains) leave gaps.
    """
    if not result.rows:
        raise ConfigError("cannot render an empty result")
    series_cols = (series,) if isinstance(series, str) else tuple(series or ())
    for col in (x, y, *series_cols):
        if col not in result.columns:
            raise ConfigError(f"unknown column {col!r}; available: {', '.join(result.columns)}")

    if len(series_cols) > 1:
        label_col = " / ".join(series_cols)
        idx = [result.columns.index(c) for c in series_cols]
        rows = [row + (", ".join(f"{c}={row[i]}" for c, i in zip(series_cols, idx)),) for row in result.rows]
        result = SweepResult(result.kind, result.columns + (label_col,), rows, result.metadata)
        key = label_col
    else:
        key = series_cols[0] if series_cols else None

    fig = Figure(figsize=(6.4, 4.2))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot()
    for label, xs, ys in iter_series(result, x, y, key):
        ys = [v if isinstance(v, (int, float)) and math.isfinite(v) else math.nan for v in ys]
        name = None if label is None else (str(label) if len(series_cols) > 1 else f"{key}={label}")
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=name)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.grid(True, which="both", linewidth=0.3)
    if title or result.kind:
        ax.set_title(title or result.kind)
    if key is not None:
        ax.legend(fontsize="small")
    fig.tight_layout()
    with matplotlib.rc_context({"svg.hashsalt": "mmcvqkd", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
