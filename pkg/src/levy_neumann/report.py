"""Error curves of sweep tables: CSV always, SVG when matplotlib works."""

from __future__ import annotations

import os
import warnings

from .solver import ALPHA, PENALIZATION, SweepTable, format_number

ERRORS_HEADER = "sweep_param,x,error,diff_std_error,combined_std_error"


def error_lines(table: SweepTable):
    lines = [ERRORS_HEADER]
    for r in table.rows:
        x = ";".join(format_number(c) for c in r.x)
        lines.append(f"{format_number(r.param)},{x},{format_number(r.error)},{format_number(r.diff_se)},{format_number(r.combined_se)}")
    return lines


def render_report(table: SweepTable, out_dir, stem: str = "sweep") -> list:
    """Write ``<stem>_errors.csv`` and ``<stem>_errors.svg``; return the written paths.

    An empty table or a plotting failure only produces a warning.
    """
    os.makedirs(out_dir, exist_ok=True)
    if not table.rows:
        warnings.warn("empty sweep table: no report written", RuntimeWarning, stacklevel=2)
        return []
    csv_path = os.path.join(out_dir, f"{stem}_errors.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write("\n".join(error_lines(table)) + "\n")
    written = [csv_path]
    try:
        written.append(_plot(table, os.path.join(out_dir, f"{stem}_errors.svg")))
    except Exception as exc:  # plotting is optional
        warnings.warn(f"plot skipped ({type(exc).__name__}: {exc}); CSV only", RuntimeWarning, stacklevel=2)
    return written


def _plot(table, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for x in dict.fromkeys(r.x for r in table.rows):
        rows = [r for r in table.rows if r.x == x]
        ax.errorbar([r.param for r in rows], [abs(r.error) for r in rows],
                    yerr=[2 * r.diff_se for r in rows], marker="o", capsize=3,
                    label="x = " + ", ".join(f"{c:g}" for c in x))
    if table.kind == PENALIZATION:
        ax.set_xscale("log")
        ax.set_xlabel("penalty n")
    elif table.kind == ALPHA:
        ax.set_xlabel("stable index alpha")
    else:
        ax.set_xlabel("perturbation")
    ax.set_ylabel("|u - target|")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
