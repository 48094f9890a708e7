"""Deterministic two-panel SVG: the signal above, the score trace below."""

import io

import numpy as np

_RC = {"svg.hashsalt": "drcpd", "svg.fonttype": "none", "path.simplify": False}


def build_figure(series, scores, labels=None, title=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    values = series.values
    t_all = np.arange(values.shape[0])
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(10, 5))
    for j in range(values.shape[1]):
        top.plot(t_all, values[:, j], lw=0.5, label=f"x{j + 1}")
    top.set_ylabel("signal")
    if values.shape[1] > 1:
        top.legend(loc="upper left", fontsize="small")
    bottom.plot(scores.t, scores.D, lw=0.8, color="k")
    bottom.set_ylabel("score D")
    bottom.set_xlabel("t")
    if labels is not None:
        on = np.asarray(labels).astype(int)
        edges = np.flatnonzero(np.diff(np.concatenate([[0], on, [0]])))
        for a, b in zip(edges[::2], edges[1::2]):
            for ax in (top, bottom):
                ax.axvspan(a, b, color="tab:red", alpha=0.12, lw=0)
    if title:
        top.set_title(title)
    fig.tight_layout()
    return fig


def render_svg(series, scores, labels=None, title=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context(_RC):
        fig = build_figure(series, scores, labels, title)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return buf.getvalue()
