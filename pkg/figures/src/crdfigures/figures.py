"""The five figure families, rendered deterministically from CSV artifacts.

Line plots show every CSV row as an explicit marker; mean lines and the
shaded standard deviation bands are derived from those same rows, so the
figure never interpolates missing sweep points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import SchemaError, Table, read_table, read_welfare_grid  # noqa: E402

FAMILIES = ("eta_vs_r", "eta_vs_delta", "strategies", "best_response",
            "welfare_heatmap")

_RC = {
    "figure.figsize": (6.4, 4.8),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "svg.hashsalt": "crdfigures",
    "svg.fonttype": "path",
    "axes.grid": True,
    "grid.alpha": 0.3,
}

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class FigureRequest:
    family: str
    inputs: list[Path]
    output: Path
    png: bool = False
    title: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SchemaError(
                f"unknown figure family {self.family!r}; expected one of {FAMILIES}")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)


def _series_label(axis: str, value: float) -> str:
    if axis == "delta":
        return f"δ = {value:g}"
    return f"r = {value:g}"


def _band_plot(ax, table: Table, x_col: str, series_col: str, y_col: str,
               label_axis: str, color_offset: int = 0) -> None:
    """Per-run markers, a mean line, and a std band for each series value."""
    if not table.rows:
        return
    x = table.floats(x_col)
    series = table.floats(series_col)
    y = table.floats(y_col)
    for k, s_val in enumerate(np.unique(series)):
        color = _COLORS[(k + color_offset) % len(_COLORS)]
        m = series == s_val
        ax.plot(x[m], y[m], ".", color=color, alpha=0.45, markersize=4)
        xs = np.unique(x[m])
        mean = np.array([y[m][x[m] == v].mean() for v in xs])
        std = np.array([y[m][x[m] == v].std() for v in xs])
        ax.fill_between(xs, mean - std, mean + std, color=color, alpha=0.2,
                        linewidth=0)
        ax.plot(xs, mean, "-o", color=color, markersize=5,
                label=_series_label(series_col, float(s_val)))


def _fig_eta_lines(request: FigureRequest, x_col: str, series_col: str):
    table = read_table(request.inputs[0], "results-v1")
    fig, ax = plt.subplots()
    _band_plot(ax, table, x_col, series_col, "eta", series_col)
    ax.set_xlabel("average risk r" if x_col == "r" else "risk diversity δ")
    ax.set_ylabel("group achievement η")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(request.title or "Group achievement")
    if table.rows:
        ax.legend()
    return fig


def _fig_strategies(request: FigureRequest):
    table = read_table(request.inputs[0], "results-v1")
    fig, ax = plt.subplots()
    x_col = "delta" if len(set(r["delta"] for r in table.rows)) > 1 else "r"
    if not table.rows:
        x_col = "delta"
    for color, y_col, label in (("#1f77b4", "mean_pi_L", "low risk π_L"),
                                ("#d62728", "mean_pi_H", "high risk π_H")):
        if not table.rows:
            continue
        x = table.floats(x_col)
        y = table.floats(y_col)
        ax.plot(x, y, ".", color=color, alpha=0.45, markersize=4)
        xs = np.unique(x)
        mean = np.array([y[x == v].mean() for v in xs])
        std = np.array([y[x == v].std() for v in xs])
        ax.fill_between(xs, mean - std, mean + std, color=color, alpha=0.2,
                        linewidth=0)
        ax.plot(xs, mean, "-o", color=color, markersize=5, label=label)
    ax.set_xlabel("risk diversity δ" if x_col == "delta" else "average risk r")
    ax.set_ylabel("mean cooperation probability")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(request.title or "Strategy profiles by risk class")
    if table.rows:
        ax.legend()
    return fig


def _fig_best_response(request: FigureRequest):
    tables = {}
    for path in request.inputs:
        schema, _, _ = _peek_schema(path)
        if schema == "bestresponse-v1":
            tables["br"] = read_table(path, "bestresponse-v1")
        elif schema == "nash-v1":
            tables["nash"] = read_table(path, "nash-v1")
        else:
            raise SchemaError(
                f"{path}: schema mismatch: expected bestresponse-v1 or nash-v1, "
                f"found {schema}")
    if "br" not in tables:
        raise SchemaError("best_response needs a bestresponse-v1 input")
    br = tables["br"]

    fig, ax = plt.subplots()
    rows_L = [r for r in br.rows if r["class"] == "L"]
    rows_H = [r for r in br.rows if r["class"] == "H"]
    # the (pi_L, pi_H) plane: a crossing of the two curves is a class Nash
    if rows_L:
        opp = np.array([float(r["opponent_pi"]) for r in rows_L])
        lo = np.array([float(r["response_min"]) for r in rows_L])
        hi = np.array([float(r["response_max"]) for r in rows_L])
        ax.fill_betweenx(opp, lo, hi, color="#1f77b4", alpha=0.2, linewidth=0)
        ax.plot(lo, opp, "-", color="#1f77b4", label="BR of low risk")
        ax.plot(hi, opp, "-", color="#1f77b4", alpha=0.6)
    if rows_H:
        opp = np.array([float(r["opponent_pi"]) for r in rows_H])
        lo = np.array([float(r["response_min"]) for r in rows_H])
        hi = np.array([float(r["response_max"]) for r in rows_H])
        ax.fill_between(opp, lo, hi, color="#d62728", alpha=0.2, linewidth=0)
        ax.plot(opp, lo, "-", color="#d62728", label="BR of high risk")
        ax.plot(opp, hi, "-", color="#d62728", alpha=0.6)
    if "nash" in tables:
        for row in tables["nash"].rows:
            ax.plot(float(row["pi_L"]), float(row["pi_H"]), "k*", markersize=12,
                    label="class Nash")
    ax.set_xlabel("low risk strategy π_L")
    ax.set_ylabel("high risk strategy π_H")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(request.title or "Class best responses")
    if br.rows:
        handles, labels = ax.get_legend_handles_labels()
        seen = dict(zip(labels, handles))
        ax.legend(seen.values(), seen.keys())
    return fig


def _fig_welfare_heatmap(request: FigureRequest):
    grid = read_welfare_grid(request.inputs[0])
    fig, ax = plt.subplots()
    if grid.welfare.size:
        # pi_H across, pi_L up; Greys maps the maximum (least-negative)
        # welfare to the darkest shade as in the appendix heat maps
        mesh = ax.pcolormesh(grid.pi_H, grid.pi_L, grid.welfare,
                             cmap="Greys", shading="nearest", rasterized=True)
        fig.colorbar(mesh, ax=ax, label="expected welfare")
        if grid.argmax is not None:
            a_L, a_H = grid.argmax
            ax.plot(a_H, a_L, "r*", markersize=13, label="maximum welfare")
            ax.legend(loc="lower left")
    ax.set_xlabel("high risk strategy π_H")
    ax.set_ylabel("low risk strategy π_L")
    title = request.title
    if not title and "r" in grid.meta and "delta" in grid.meta:
        title = f"Welfare, r = {float(grid.meta['r']):g}, δ = {float(grid.meta['delta']):g}"
    ax.set_title(title or "Population welfare")
    return fig


def _peek_schema(path):
    from .io import _split_file
    return _split_file(path)


def build_figure(request: FigureRequest):
    """Construct the matplotlib figure for a request without saving it."""
    if not request.inputs:
        raise SchemaError("at least one input CSV is required")
    with matplotlib.rc_context(_RC):
        if request.family == "eta_vs_r":
            return _fig_eta_lines(request, "r", "delta")
        if request.family == "eta_vs_delta":
            return _fig_eta_lines(request, "delta", "r")
        if request.family == "strategies":
            return _fig_strategies(request)
        if request.family == "best_response":
            return _fig_best_response(request)
        return _fig_welfare_heatmap(request)


def render(request: FigureRequest) -> Path:
    """Render a figure family to SVG (and optionally PNG) deterministically."""
    with matplotlib.rc_context(_RC):
        fig = build_figure(request)
        try:
            request.output.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(request.output, format="svg", metadata={"Date": None})
            if request.png:
                fig.savefig(request.output.with_suffix(".png"), format="png")
        finally:
            plt.close(fig)
    return request.output
