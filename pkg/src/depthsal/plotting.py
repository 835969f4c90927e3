"""Matplotlib figures written next to the CSV reports."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STAGE_LABELS = {"s1hat": "layer 1", "s2hat": "layer 2", "s": "final"}

_RC = {
    "font.size": 9,
    "axes.linewidth": 0.8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.4,
    "legend.frameon": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(str(path))
    plt.close(fig)
    return path


def _curve_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(3.4, 3.0))
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3, linewidth=0.5)
    return fig, ax


def plot_pr(reports, path, title="Precision-recall"):
    """PR curves of one or several reports (``{label: EvalReport}``)."""
    if not isinstance(reports, dict):
        reports = {"s": reports}
    with plt.rc_context(_RC):
        fig, ax = _curve_axes(title, "Recall", "Precision")
        for label, rep in reports.items():
            ax.plot(rep.curves.recall, rep.curves.precision, label=STAGE_LABELS.get(label, label))
        if len(reports) > 1:
            ax.legend(loc="lower left")
        return _save(fig, path)


def plot_roc(reports, path, title="ROC"):
    if not isinstance(reports, dict):
        reports = {"s": reports}
    with plt.rc_context(_RC):
        fig, ax = _curve_axes(title, "False positive rate", "True positive rate")
        ax.plot([0, 1], [0, 1], color="0.7", linewidth=0.6, linestyle="--")
        for label, rep in reports.items():
            ax.plot(rep.curves.fpr, rep.curves.tpr, label=STAGE_LABELS.get(label, label))
        if len(reports) > 1:
            ax.legend(loc="lower right")
        return _save(fig, path)


def plot_stages(img, depth, outputs, path):
    """Input, depth, center bias and every layer's map side by side."""
    panels = [
        ("input", img, None),
        ("depth", depth, "gray"),
        ("center bias", outputs.center_bias, "gray"),
        ("extended", outputs.extended, None),
        ("layer 1", outputs.s1hat, "gray"),
        ("reprocessed", outputs.reprocessed, None),
        ("layer 2", outputs.s2hat, "gray"),
        ("final", outputs.s_final, "gray"),
    ]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(2, 4, figsize=(9, 4.2))
        for ax, (name, data, cmap) in zip(axes.ravel(), panels):
            ax.imshow(np.clip(data, 0, 1), cmap=cmap, vmin=0, vmax=1)
            ax.set_title(name)
            ax.set_axis_off()
        fig.tight_layout()
        return _save(fig, path)
