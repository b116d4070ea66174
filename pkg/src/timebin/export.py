"""File output: CSV tables, JSON summaries and helper plot scripts.

All writes go to a temporary file in the target directory and are moved
into place with ``os.replace``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import DynamicsTrace
from .franson import FransonResult

SCHEMA_VERSION = 1
TRACE_COLUMNS = ("t", "n_sp", "flux_s", "flux_as", "cum_s", "cum_as")
FRINGE_COLUMNS = ("theta", "n1", "n2", "stderr1", "stderr2")


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def atomic_write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def table_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_json(path: str | Path, payload: dict) -> Path:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    return atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_trace_csv(path: str | Path, trace: DynamicsTrace) -> Path:
    cols = [trace.grid, trace.n_sp, trace.flux_s, trace.flux_as, trace.cum_s, trace.cum_as]
    rows = zip(*(c.tolist() for c in cols))
    return atomic_write(path, table_text(TRACE_COLUMNS, rows))


def read_trace_csv(path: str | Path) -> DynamicsTrace:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if tuple(header) != TRACE_COLUMNS:
        raise ValueError(f"{path}: unexpected trace columns {header}")
    return DynamicsTrace(*(data[:, i] for i in range(len(TRACE_COLUMNS))))


def write_fringe_csv(path: str | Path, result: FransonResult) -> Path:
    rows = zip(result.theta_grid.tolist(), result.counts1.tolist(), result.counts2.tolist(),
               result.stderr.tolist(), result.stderr.tolist())
    return atomic_write(path, table_text(FRINGE_COLUMNS, rows))


TRACE_PLOT = '''"""Plot trace.csv produced by `timebin simulate` (requires matplotlib)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trace.csv"
with open(path) as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
fig, ax = plt.subplots(figsize=(7, 3.5))
ax.plot(t, [float(r["flux_s"]) for r in rows], "k:", label="Stokes flux")
ax.plot(t, [float(r["flux_as"]) for r in rows], "b-", label="anti-Stokes flux")
ax.set_xlabel("time (1/gamma)")
ax.set_ylabel("photon flux (gamma)")
ax.legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''

FRINGE_PLOT = '''"""Plot fringe_*.csv produced by `timebin franson` (requires matplotlib)."""
import csv
import glob
import sys

import matplotlib.pyplot as plt

paths = sys.argv[1:] or sorted(glob.glob("fringe_*.csv"))
fig, ax = plt.subplots(figsize=(6, 3.5))
for p in paths:
    with open(p) as fh:
        rows = list(csv.DictReader(fh))
    ax.plot([float(r["theta"]) for r in rows], [float(r["n1"]) for r in rows], label=p)
ax.set_xlabel("theta (rad)")
ax.set_ylabel("mean count, detector 1")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("fringes.png", dpi=150)
'''


def write_plot_script(path: str | Path, kind: str) -> Path:
    return atomic_write(path, TRACE_PLOT if kind == "trace" else FRINGE_PLOT)
