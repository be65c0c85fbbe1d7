"""CSV reading and writing with round-trip float formatting."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"

TRAJECTORY_HEADER = ("t", "theta1", "theta2", "omega1", "omega2", "tau1_applied",
                     "tau2_applied", "tau1_cmd", "tau2_cmd", "S1", "S2")


def _fmt_row(values) -> str:
    return ",".join("" if v is None else FLOAT_FMT % v for v in values)


def write_columns(path: Path, header, columns, comments=()) -> Path:
    """Write equal-length numeric columns; ``comments`` go after the data as '# ...' lines."""
    path = Path(path)
    cols = [np.asarray(c, dtype=float) for c in columns]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    if cols and len(cols[0]):
        np.savetxt(buf, np.column_stack(cols), fmt=FLOAT_FMT, delimiter=",")
    for line in comments:
        buf.write(f"# {line}\n")
    path.write_text(buf.getvalue())
    return path


def write_trajectory(path: Path, tr) -> Path:
    path = Path(path)
    base = np.column_stack([tr.t, tr.theta, tr.omega, tr.tau_applied, tr.tau_cmd])
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_HEADER) + "\n")
    if len(base):
        if tr.S is None:
            np.savetxt(buf, base, fmt=",".join([FLOAT_FMT] * base.shape[1]) + ",,")
        else:
            np.savetxt(buf, np.column_stack([base, tr.S]), fmt=FLOAT_FMT, delimiter=",")
    path.write_text(buf.getvalue())
    return path


def read_columns(path: Path) -> tuple[list[str], dict[str, np.ndarray], list[str]]:
    """Return (header, name -> column, comment lines). Empty cells read as NaN."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        return [], {}, []
    header = lines[0].split(",")
    rows, comments = [], []
    for line in lines[1:]:
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            rows.append([float(c) if c else np.nan for c in line.split(",")])
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, {name: data[:, i] for i, name in enumerate(header)}, comments


def parse_summary(comments) -> dict[str, str]:
    """'key=value' pairs from comment lines."""
    out = {}
    for line in comments:
        for part in line.split():
            if "=" in part:
                k, v = part.split("=", 1)
                out[k] = v
    return out
