"""CSV and JSON emission with a fixed dialect and atomic replacement.

All tables use comma separation, '.' decimal, scientific notation with 15
significant digits, a mandatory header row, and LF line endings, so reruns
with identical inputs produce byte-identical files suitable for diffing.
Files are written to a temporary sibling and moved into place with
os.replace, so readers never observe a partial file.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.15e}"
    if isinstance(value, (complex, np.complexfloating)):
        c = complex(value)
        return f"{c.real:.15e}{c.imag:+.15e}j"
    return str(value)


def atomic_write_text(path: str, text: str) -> str:
    """Write text atomically; returns the sha256 hex digest of the bytes."""
    data = text.encode("utf-8")
    digest = hashlib.sha256(data).hexdigest()
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return digest


def write_csv(path: str, header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    lines.append("")
    return atomic_write_text(path, "\n".join(lines))


def write_json(path: str, payload: dict) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    return atomic_write_text(path, text)


def write_area_spectrum(path: str, spectrum) -> str:
    """Columns: rank, label, value, quasi_energy."""
    rows = zip(range(1, len(spectrum.areas) + 1), spectrum.labels,
               spectrum.areas, spectrum.quasi_energies)
    return write_csv(path, ["rank", "label", "value", "quasi_energy"], rows)


def write_cell_lengths(path: str, length_map) -> str:
    """Columns: X, P, length, label; rows iterate X then P ascending."""
    rows = []
    n_x, n_p = length_map.lengths.shape
    for x in range(n_x):
        for p in range(n_p):
            rows.append((x, p, length_map.lengths[x, p], length_map.labels[x, p]))
    return write_csv(path, ["X", "P", "length", "label"], rows)


def write_classical_spectrum(path: str, spectrum) -> str:
    rows = zip(range(1, len(spectrum.areas) + 1), spectrum.labels, spectrum.areas)
    return write_csv(path, ["rank", "label", "area"], rows)


def write_phase_grid(path: str, grid_xp) -> str:
    """Grid indexed [X, P] written as N_p rows by N_x columns, P and X
    ascending."""
    grid = np.asarray(grid_xp)
    n_x, n_p = grid.shape
    header = [f"X{ix}" for ix in range(n_x)]
    return write_csv(path, header, (grid[:, p] for p in range(n_p)))


def write_distribution(path: str, dist) -> str:
    """Cell-probability grid, N_p rows by N_x columns, P and X ascending."""
    return write_phase_grid(path, dist.grid)


def write_grid(path: str, grid) -> str:
    """Generic numeric grid with column-index header, one row per line."""
    arr = np.asarray(grid)
    header = [f"c{j}" for j in range(arr.shape[1])]
    return write_csv(path, header, arr)


def write_deff_table(path: str, labels, slopes, deffs, residuals) -> str:
    rows = zip(labels, slopes, deffs, residuals)
    return write_csv(path, ["label", "slope", "d_eff", "residual"], rows)


def write_generic_summary(path: str, scan) -> str:
    rows = [(e.step.index, e.step.M, e.step.n_p, e.step.delta_hbar, e.area_at_half)
            for e in scan.entries]
    return write_csv(path, ["j", "M", "N_p", "delta_hbar", "area_at_half"], rows)


def write_truncated_states(path: str, ts) -> str:
    rows = zip(ts.state_indices, ts.mean_momenta, ts.normalized_areas)
    return write_csv(path, ["state_index", "mean_momentum", "normalized_area"], rows)


def write_momentum_profiles(path: str, ts, limit: int) -> str:
    """Per-state |<n|phi>|^2 rows, one row per kept state (capped at limit),
    first column the state index."""
    keep = min(limit, ts.momentum_profiles.shape[0])
    header = ["state_index"] + [f"n{n}" for n in range(1, ts.n_cut + 1)]
    rows = ((ts.state_indices[i], *ts.momentum_profiles[i]) for i in range(keep))
    return write_csv(path, header, rows)
