"""RFC-4180 CSV output.

Floats are written with ``repr`` (shortest round-trip form), so identical
arrays always produce identical bytes.
"""
import csv
import io
import os

import numpy as np

from .exceptions import ValidationError

__all__ = ["trajectory_rows", "write_trajectory_csv", "write_series_csv", "write_sweep_csv",
           "write_rows"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_rows(target, header, rows):
    """Write ``header`` and ``rows`` to a path or text stream; returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if target is None:
        return text
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        target.write(text)
    return text


def trajectory_rows(traj, form="wide"):
    states = np.asarray(traj.states)
    k = states.shape[0]
    states = states.reshape(k, states.shape[1], -1) if states.ndim >= 2 else states.reshape(k, 1, 1)
    _, n, m = states.shape
    if form == "wide":
        header = ["t"] + [f"x_{i + 1}_{a + 1}" for i in range(n) for a in range(m)]
        rows = ([t, *x.ravel()] for t, x in zip(traj.times, states))
    elif form == "long":
        header = ["t", "node", "comp", "value"]
        rows = ([t, i + 1, a + 1, x[i, a]] for t, x in zip(traj.times, states)
                for i in range(n) for a in range(m))
    else:
        raise ValidationError(f"csv form must be 'wide' or 'long', got {form!r}")
    return header, rows


def write_trajectory_csv(traj, target=None, form="wide"):
    """Trajectory as ``t,x_1_1,...,x_n_m`` (wide) or ``t,node,comp,value`` (long)."""
    header, rows = trajectory_rows(traj, form)
    return write_rows(target, header, rows)


def write_series_csv(times, values, name, target=None):
    """Two-column series such as ``t,spread`` or ``t,e_s``."""
    return write_rows(target, ["t", name], zip(times, values))


def write_sweep_csv(results, target=None):
    """One row per grid point; failed points keep their beta and leave the rest blank."""
    header = ["beta", "alpha_c", "rho_c", "bisection_width", "evaluations"]
    rows = []
    for r in results:
        if r.alpha_c is None:
            rows.append([r.beta, None, None, None, r.evaluations])
        else:
            rows.append([r.beta, r.alpha_c, r.rho_c, r.bisection_width, r.evaluations])
    return write_rows(target, header, rows)
