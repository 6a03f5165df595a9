"""CSV writers with shortest round-trip float formatting."""

from __future__ import annotations

import csv
import io
import os
import sys

import numpy as np

from .single_photon import AmplitudeTable

SPECTRUM_HEADER = ("k", "re_t11", "im_t11", "re_t21", "im_t21", "T11", "T21", "unitarity_residual")
TRACE_HEADER = ("tau", "g2", "baseline")
SWEEP_HEADER = ("E_half", "T11_sq_product", "fluorescence", "half_g2")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def csv_text(header, columns) -> str:
    cols = [np.asarray(c).ravel() for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns differ in length")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i in range(n):
        writer.writerow([_fmt(c[i]) for c in cols])
    return buf.getvalue()


def write_csv(dest, header, columns):
    """Write to a path, or to stdout when dest is None or '-'."""
    text = csv_text(header, columns)
    if dest is None or dest == "-":
        sys.stdout.write(text)
        return
    parent = os.path.dirname(os.fspath(dest))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def spectrum_columns(table: AmplitudeTable):
    t11, t21 = table.t(1, 1), table.t(2, 1)
    return [table.grid.k_values, t11.real, t11.imag, t21.real, t21.imag,
            np.abs(t11) ** 2, np.abs(t21) ** 2, table.unitarity_residual]
