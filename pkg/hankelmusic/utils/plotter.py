"""A collection of plotting wrappers for experiment reports

Figures are written as self-contained SVG files. The hash salt is fixed and
the date metadata dropped so the same data always gives the same bytes.
"""

import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import seaborn as sns  # noqa: E402
from matplotlib.colors import Normalize  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from hankelmusic.bounds import superres_tolerance_model  # noqa: E402
from hankelmusic.io.utils import config_line  # noqa: E402
from hankelmusic.utils.constants import (  # noqa: E402
    SUCCESS_RATIO,
    SVG_HASHSALT,
)

logger = logging.getLogger(__name__)

# set the default font and fontsize
plt.rcParams["text.usetex"] = False
params = {
    "figure.figsize": (8, 6),
    "font.style": "normal",
    "font.serif": "DejaVu Serif",
    "font.sans-serif": "DejaVu Sans",
    "font.monospace": "DejaVu Sans Mono",
    "mathtext.rm": "sans",
    "mathtext.fontset": "stix",
    "legend.fontsize": 11,
    "axes.labelsize": 11,
    "xtick.labelsize": 10,
    "ytick.labelsize": 10,
    "xtick.top": True,
    "xtick.bottom": True,
    "xtick.direction": "inout",
    "xtick.minor.visible": True,
    "ytick.left": True,
    "ytick.right": True,
    "ytick.direction": "inout",
    "ytick.minor.visible": True,
    "svg.hashsalt": SVG_HASHSALT,
    "svg.fonttype": "path",
}
plt.rcParams.update(params)


__all__ = [
    "save_svg",
    "overlay_tolerance_curve",
    "plot_phase_grid",
    "plot_transition_curves",
    "plot_error_vs_nsr",
]

# color range of log2(mean d/q) in phase plots
LOG2_RATIO_MIN = -8.0
LOG2_RATIO_MAX = 2.0


def save_svg(fig, fname: str, config: dict = None) -> str:
    """Write `fig` as SVG without date metadata and close it

    The resolved configuration goes into the SVG description.
    """

    metadata = {"Date": None, "Description": config_line(config)}
    try:
        fig.savefig(fname, format="svg", metadata=metadata)
    except OSError as err:
        msg = f"cannot write figure `{fname}`: {err.strerror or err}"
        logger.error(msg)
        raise OSError(err.errno, msg, fname) from err
    finally:
        plt.close(fig)

    logger.debug(f"figure saved to `{fname}`")

    return fname


def _log_axis(values, positions):
    """Sorted log10 values with their axis positions, zeros dropped"""

    values = np.asarray(values, dtype=float)
    positions = np.asarray(positions, dtype=float)
    keep = values > 0
    order = np.argsort(values[keep], kind="stable")
    return np.log10(values[keep][order]), positions[keep][order]


def overlay_tolerance_curve(ax, grid, curve, n_points=200, color="tab:blue"):
    """Draw the fitted power law of `curve` across the cells of `grid`

    q and NSR are interpolated in log scale onto the cell axes: q at the
    column centers, NSR at the top edge of its row. Points outside the
    tested NSR range are left out. The line has gid `tolerance-curve`.
    """

    log_q, q_pos = _log_axis(
        grid.q_values_rl, np.arange(len(grid.q_values_rl)) + 0.5
    )
    log_nsr, nsr_pos = _log_axis(
        grid.nsr_values, np.arange(len(grid.nsr_values)) + 1.0
    )
    if log_q.size < 2 or log_nsr.size < 2:
        logger.debug("not enough positive grid values to draw the curve")
        return None

    q = np.logspace(log_q[0], log_q[-1], n_points)
    model = np.log10(
        superres_tolerance_model(
            q, curve.fitted_exponent, curve.fitted_scale
        )
    )
    x = np.interp(np.log10(q), log_q, q_pos)
    y = np.interp(model, log_nsr, nsr_pos)
    y[(model < log_nsr[0]) | (model > log_nsr[-1])] = np.nan

    (line,) = ax.plot(
        x,
        y,
        color=color,
        linestyle="--",
        linewidth=1.5,
        label=f"fit, exponent {curve.fitted_exponent:.2f}",
        gid="tolerance-curve",
    )
    return line


def plot_phase_grid(
    grid,
    fname=None,
    curve=None,
    fig=None,
    ax=None,
    cmap="rocket_r",
    xlabel="separation q (RL)",
    ylabel="NSR",
    config=None,
):
    """Color plot of log2 of the mean d(S, S^)/q of a phase grid

    One rectangle is drawn per (nsr, q) cell, with gid `cell-<i>-<j>`;
    colors span `LOG2_RATIO_MIN` to `LOG2_RATIO_MAX`. Cells that succeed on
    average have a white edge. When `curve` is given the critical NSR of
    each of its columns is marked by a black bar on top of its cell, and
    its fitted power law is drawn across the grid.

    Parameters
    ----------
    grid : `PhaseGrid`
        Cells to draw.

    fname : `string`
        SVG output. When None the figure is returned instead.

    curve : `TransitionCurve`
        Optional fitted transition.

    fig: `matplotlib Figure`
        A figure on which to plot. Both `ax` and `fig` must be supplied for
        either to be used

    ax: `matplotlib Axis`
        An axis on which to plot.

    cmap : `string`
        Seaborn palette name.

    xlabel, ylabel : `string`
        Axis labels.

    config : `dictionary`
        Configuration embedded in the SVG.

    Returns
    -------
    fname or (fig, ax)
    """

    # create new figure and axes is either weren't provided
    if fig is None or ax is None:
        fig, ax = plt.subplots()

    colors = sns.color_palette(cmap, as_cmap=True)
    norm = Normalize(vmin=LOG2_RATIO_MIN, vmax=LOG2_RATIO_MAX, clip=True)
    log_ratio = np.log2(
        np.maximum(grid.cell_stats, 2.0 ** LOG2_RATIO_MIN)
    )

    n_nsr, n_q = grid.cell_stats.shape
    for i in range(n_nsr):
        for j in range(n_q):
            value = grid.cell_stats[i, j]
            ax.add_patch(
                Rectangle(
                    (j, i),
                    1.0,
                    1.0,
                    facecolor=colors(norm(log_ratio[i, j])),
                    edgecolor="white" if value < SUCCESS_RATIO else "none",
                    linewidth=0.5,
                    gid=f"cell-{i}-{j}",
                )
            )

    if curve is not None:
        nsr = list(np.asarray(grid.nsr_values, dtype=float))
        q_values = list(np.asarray(grid.q_values_rl, dtype=float))
        for q, critical in zip(curve.q_values_rl, curve.critical_nsr):
            if q in q_values and critical in nsr:
                j, i = q_values.index(q), nsr.index(critical)
                ax.hlines(i + 1, j, j + 1, colors="black", linewidth=2.5)
        if overlay_tolerance_curve(ax, grid, curve) is not None:
            ax.legend(loc="lower right")

    ax.set_xlim(0, n_q)
    ax.set_ylim(0, n_nsr)
    ax.set_xticks(np.arange(n_q) + 0.5)
    ax.set_xticklabels([f"{q:.3g}" for q in grid.q_values_rl])
    ax.set_yticks(np.arange(n_nsr) + 0.5)
    ax.set_yticklabels([f"{v:.2g}" for v in grid.nsr_values])
    ax.minorticks_off()

    mappable = plt.cm.ScalarMappable(norm=norm, cmap=colors)
    mappable.set_array([])
    fig.colorbar(mappable, ax=ax, label="log2 mean d(S, S^)/q")

    # update axis labels
    if xlabel is not None:
        ax.set_xlabel(xlabel)
    if ylabel is not None:
        ax.set_ylabel(ylabel)
    ax.set_title(f"R* = {grid.cluster_size}, M = {grid.M}")

    if fname is None:
        return fig, ax

    return save_svg(fig, fname, config)


def plot_transition_curves(
    curves,
    fname=None,
    fig=None,
    ax=None,
    xlabel="separation q (RL)",
    ylabel="critical NSR",
    palette="deep",
    config=None,
):
    """Critical NSR against q in log-log scale, one line per cluster size

    Markers are the measured critical NSR of each kept column; the dashed
    line of the same color is the fitted power law.

    Parameters
    ----------
    curves : `dictionary`
        `TransitionCurve` for each cluster size R*.

    fname : `string`
        SVG output. When None the figure is returned instead.

    fig, ax : `matplotlib Figure, Axis`
        Where to draw; both must be supplied for either to be used.

    xlabel, ylabel : `string`
        Axis labels.

    palette : `string`
        Seaborn palette, one color per R*.

    config : `dictionary`
        Configuration embedded in the SVG.

    Returns
    -------
    fname or (fig, ax)
    """

    if not curves:
        raise ValueError("`curves` must hold at least one transition curve")

    if fig is None or ax is None:
        fig, ax = plt.subplots()

    rstars = sorted(curves)
    colors = sns.color_palette(palette, len(rstars))
    for rstar, color in zip(rstars, colors):
        curve = curves[rstar]
        q = np.asarray(curve.q_values_rl, dtype=float)
        ax.plot(
            q,
            curve.critical_nsr,
            color=color,
            marker="o",
            linestyle="none",
            gid=f"critical-{rstar}",
        )
        q_fine = np.geomspace(q.min(), q.max(), 100)
        ax.plot(
            q_fine,
            superres_tolerance_model(
                q_fine, curve.fitted_exponent, curve.fitted_scale
            ),
            color=color,
            linestyle="--",
            label=f"R* = {rstar}, exponent {curve.fitted_exponent:.2f}",
            gid=f"fit-{rstar}",
        )

    ax.set_xscale("log")
    ax.set_yscale("log")
    if xlabel is not None:
        ax.set_xlabel(xlabel)
    if ylabel is not None:
        ax.set_ylabel(ylabel)
    ax.legend()

    if fname is None:
        return fig, ax

    return save_svg(fig, fname, config)


def plot_error_vs_nsr(
    summaries,
    fname=None,
    fig=None,
    ax=None,
    xlabel="NSR",
    ylabel="Hausdorff distance (RL)",
    palette="deep",
    config=None,
):
    """Mean and median Hausdorff distance of each batch against its NSR

    This function is a wrapper for :func:`seaborn.lineplot`.

    Parameters
    ----------
    summaries : `list of TrialSummary`
        One summary per noise level.

    fname : `string`
        SVG output. When None the figure is returned instead.

    fig, ax : `matplotlib Figure, Axis`
        Where to draw; both must be supplied for either to be used.

    xlabel, ylabel : `string`
        Axis labels.

    palette : `string`
        Seaborn palette for the two curves.

    config : `dictionary`
        Configuration embedded in the SVG.

    Returns
    -------
    fname or (fig, ax)
    """

    if fig is None or ax is None:
        fig, ax = plt.subplots()

    nsr = np.array([summary.spec.nsr for summary in summaries])
    mean = np.array([summary.mean for summary in summaries])
    median = np.array([summary.median for summary in summaries])
    order = np.argsort(nsr, kind="stable")

    colors = sns.color_palette(palette, 2)
    for values, color, marker, label in (
        (mean, colors[0], "o", "mean"),
        (median, colors[1], "s", "median"),
    ):
        sns.lineplot(
            x=nsr[order],
            y=values[order],
            ax=ax,
            color=color,
            marker=marker,
            label=label,
        )

    positive = nsr[nsr > 0]
    if positive.size and positive.size == nsr.size:
        ax.set_xscale("log")
    elif positive.size:
        ax.set_xscale("symlog", linthresh=float(positive.min()))

    if xlabel is not None:
        ax.set_xlabel(xlabel)
    if ylabel is not None:
        ax.set_ylabel(ylabel)
    ax.legend()

    if fname is None:
        return fig, ax

    return save_svg(fig, fname, config)
