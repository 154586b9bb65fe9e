"""Figure rendering for experiment summaries.

One plot: mean BER per traced stage, one line per scheme, log-scale y axis
with the 95% interval as a shaded band.  Written next to the CSVs so a run
directory is self-contained.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def plot_summary(summary, path, title=None):
    """Render the per-stage mean BER trace of every scheme to a PNG file.

    summary is the list of dicts produced by runner.summarize; 'final' rows
    are skipped (they duplicate the last stage in the trace).
    """
    by_scheme = {}
    for entry in summary:
        if entry["stage"] == "final":
            continue
        by_scheme.setdefault(entry["scheme"], []).append(entry)

    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    floor = 1e-12
    for scheme, entries in by_scheme.items():
        xs = range(1, len(entries) + 1)
        ys = [max(e["mean_ber"], floor) for e in entries]
        lo = [max(e["ci95_low"], floor) for e in entries]
        hi = [max(e["ci95_high"], floor) for e in entries]
        (line,) = ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=1.0,
                          label=scheme)
        ax.fill_between(xs, lo, hi, alpha=0.2, color=line.get_color())
    ax.set_yscale("log")
    ax.set_xlabel("computing step")
    ax.set_ylabel("mean bit error rate")
    if title:
        ax.set_title(title)
    if by_scheme:
        ax.legend(loc="best", fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
